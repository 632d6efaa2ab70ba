#include "hse/shipped.h"

#include "hse/error.h"

namespace hse {

namespace {

ModelSpec base(const std::string& name, Family f, Domain d, Geometry g) {
  ModelSpec s;
  s.name = name;
  s.family = f;
  s.domain = d;
  s.bins = 129;
  s.geometry = std::move(g);
  s.conversions = canonical_conversions(d);
  return s;
}

const Geometry kCdaeGeometry{8, 3, {2, 2, 2, 2}};
const Geometry kRealCrnGeometry{7, 4, {2, 2, 2, 3}};
const Geometry kComplexCrnGeometry{9, 5, {2, 3, 2, 2}};
const Geometry kToyGeometry{8, 3, {2, 2}};

}  // namespace

std::vector<std::string> reference_model_names() {
  return {"rCDAE", "cCDAE", "hCDAE", "rCRN", "cCRN", "hCRN"};
}

std::vector<std::string> shipped_names() {
  auto names = reference_model_names();
  names.push_back("toy_rCDAE");
  names.push_back("toy_hCDAE");
  return names;
}

ModelSpec shipped_spec(const std::string& name) {
  if (name == "rCDAE") {
    ModelSpec s = base(name, Family::kCdae, Domain::kReal, kCdaeGeometry);
    s.real = {{16, 32, 64, 128}, {}, 0, {64, 32, 16, 1}};
    return s;
  }
  if (name == "cCDAE") {
    ModelSpec s = base(name, Family::kCdae, Domain::kComplex, kCdaeGeometry);
    s.complex = {{16, 18, 44, 96}, {}, 0, {44, 18, 16, 1}};
    return s;
  }
  if (name == "hCDAE") {
    ModelSpec s = base(name, Family::kCdae, Domain::kHybrid, kCdaeGeometry);
    s.real = {{16, 18, 44, 96}, {}, 0, {22, 14, 8, 1}};
    s.complex = {{8, 16, 32, 64}, {}, 0, {20, 14, 8, 1}};
    return s;
  }
  if (name == "rCRN") {
    ModelSpec s = base(name, Family::kCrn, Domain::kReal, kRealCrnGeometry);
    s.real = {{16, 32, 64, 128}, {96, 96}, 1536, {64, 32, 16, 1}};
    return s;
  }
  if (name == "cCRN") {
    ModelSpec s = base(name, Family::kCrn, Domain::kComplex, kComplexCrnGeometry);
    s.complex = {{16, 22, 44, 64}, {110, 112}, 512, {44, 22, 16, 1}};
    return s;
  }
  if (name == "hCRN") {
    ModelSpec s = base(name, Family::kCrn, Domain::kHybrid, kComplexCrnGeometry);
    s.real = {{22, 24, 44, 64}, {110, 110}, 512, {24, 16, 8, 1}};
    s.complex = {{8, 16, 32, 48}, {76, 76}, 384, {22, 14, 8, 1}};
    return s;
  }
  if (name == "toy_rCDAE") {
    ModelSpec s = base(name, Family::kCdae, Domain::kReal, kToyGeometry);
    s.real = {{16, 32}, {}, 0, {16, 1}};
    return s;
  }
  if (name == "toy_hCDAE") {
    ModelSpec s = base(name, Family::kCdae, Domain::kHybrid, kToyGeometry);
    s.real = {{8, 8}, {}, 0, {8, 1}};
    s.complex = {{4, 4}, {}, 0, {4, 1}};
    return s;
  }
  throw ConfigError("unknown shipped model '" + name + "'");
}

}  // namespace hse
