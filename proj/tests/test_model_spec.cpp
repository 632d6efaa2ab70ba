#include <gtest/gtest.h>

#include <filesystem>

#include "hse/error.h"
#include "hse/model_spec.h"
#include "hse/ops.h"
#include "hse/shipped.h"

using namespace hse;

TEST(Shipped, RealCdaeWidths) {
  const ModelSpec s = shipped_spec("rCDAE");
  EXPECT_EQ(s.real.conv, (std::vector<std::size_t>{16, 32, 64, 128}));
  EXPECT_EQ(s.real.deconv, (std::vector<std::size_t>{64, 32, 16, 1}));
}

TEST(Shipped, HybridCrnComplexBranch) {
  const ModelSpec s = shipped_spec("hCRN");
  EXPECT_EQ(s.complex.gru, (std::vector<std::size_t>{76, 76}));
  EXPECT_EQ(s.complex.linear, 384u);
}

TEST(Shipped, AllValidate) {
  for (const std::string& n : shipped_names()) {
    EXPECT_NO_THROW(validate(shipped_spec(n))) << n;
  }
  EXPECT_THROW(shipped_spec("nope"), ConfigError);
}

TEST(Shipped, DecoderRestoresInputExtent) {
  for (const std::string& n : shipped_names()) {
    const ModelSpec s = shipped_spec(n);
    const auto plan = plan_layers(s);
    for (BranchId b : {BranchId::kReal, BranchId::kComplex}) {
      const LayerPlan* first = nullptr;
      const LayerPlan* last = nullptr;
      for (const LayerPlan& p : plan) {
        if (p.branch != b) continue;
        if (!first) first = &p;
        last = &p;
      }
      if (!first) continue;
      EXPECT_EQ(first->f_in, branch_input_bins(s, b)) << n;
      EXPECT_EQ(last->f_out, branch_input_bins(s, b)) << n;
      EXPECT_EQ(last->out, 1u) << n;
    }
  }
}

TEST(Plan, FrequencyChainMatchesConvArithmetic) {
  const ModelSpec s = shipped_spec("rCRN");
  std::size_t f = 258;
  for (const LayerPlan& p : plan_layers(s)) {
    if (p.kind != LayerKind::kConv) continue;
    EXPECT_EQ(p.f_in, f);
    f = conv_output_extent(f, p.kernel, p.stride, p.pad);
    EXPECT_EQ(p.f_out, f);
  }
  EXPECT_EQ(bottleneck_bins(s, BranchId::kReal), f);
  EXPECT_EQ(s.real.linear, s.real.conv.back() * f);
}

TEST(Plan, ActivationPlacement) {
  const auto cdae = plan_layers(shipped_spec("hCDAE"));
  for (const LayerPlan& p : cdae) {
    if (p.part == Part::kEncoder) {
      const bool last_enc = p.name.find("conv3") != std::string::npos;
      EXPECT_EQ(p.activation, last_enc ? Activation::kTanh : Activation::kRelu) << p.name;
    }
  }
  EXPECT_EQ(cdae.back().activation, Activation::kNone);
  for (const LayerPlan& p : cdae) {
    if (p.name == "real.dec.convT3") EXPECT_EQ(p.activation, Activation::kSigmoid);
  }
  for (const LayerPlan& p : plan_layers(shipped_spec("rCRN"))) {
    if (p.kind == LayerKind::kLinear) EXPECT_EQ(p.activation, Activation::kTanh);
    if (p.kind == LayerKind::kConv) EXPECT_EQ(p.activation, Activation::kRelu);
  }
}

TEST(Json, RoundTripAllShipped) {
  for (const std::string& n : shipped_names()) {
    const ModelSpec s = shipped_spec(n);
    const ModelSpec back = spec_from_json(to_json(s));
    EXPECT_TRUE(back == s) << n;
    EXPECT_EQ(spec_hash(back), spec_hash(s));
  }
}

TEST(Json, UnknownKeyRejected) {
  std::string j = to_json(shipped_spec("rCDAE"));
  j.insert(1, "\"dropout\": 0.1,");
  EXPECT_THROW(spec_from_json(j), ConfigError);
}

TEST(Json, VersionRequired) {
  std::string j = to_json(shipped_spec("rCDAE"));
  const auto pos = j.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_THROW(spec_from_json(j.replace(pos, 12, "\"version\": 7")), ConfigError);
}

TEST(Json, MalformedRejected) {
  EXPECT_THROW(spec_from_json("{"), ConfigError);
  EXPECT_THROW(spec_from_json("[]"), ConfigError);
}

TEST(Json, ShippedConfigFilesMatch) {
  for (const std::string& n : shipped_names()) {
    const std::string path = std::string(HSE_SOURCE_DIR) + "/configs/" + n + ".json";
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_TRUE(load_spec(path) == shipped_spec(n)) << n;
  }
}

TEST(Validate, EmptyEncoderRejected) {
  ModelSpec s = shipped_spec("rCDAE");
  s.real.conv.clear();
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Validate, DepthMismatchRejected) {
  ModelSpec s = shipped_spec("rCDAE");
  s.real.deconv.pop_back();
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Validate, LastDecoderWidthMustBeOne) {
  ModelSpec s = shipped_spec("cCDAE");
  s.complex.deconv.back() = 2;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Validate, CrnLinearMustMatchBottleneck) {
  ModelSpec s = shipped_spec("cCRN");
  s.complex.linear += 2;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Validate, ConversionsMustBeCanonical) {
  ModelSpec s = shipped_spec("hCDAE");
  s.conversions.pop_back();
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Validate, RealModelMustNotCarryComplexBranch) {
  ModelSpec s = shipped_spec("rCDAE");
  s.complex = shipped_spec("cCDAE").complex;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Validate, GeometryTooDeepForBins) {
  ModelSpec s = shipped_spec("cCDAE");
  s.bins = 9;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Params, PartSumsEqualTotal) {
  for (const std::string& n : shipped_names()) {
    const ModelSpec s = shipped_spec(n);
    std::size_t sum = 0;
    for (BranchId b : {BranchId::kReal, BranchId::kComplex}) {
      for (Part p : {Part::kEncoder, Part::kDecoder}) sum += part_params(s, b, p);
    }
    EXPECT_EQ(sum, total_params(s)) << n;
  }
}

TEST(Names, ParseRoundTrip) {
  EXPECT_EQ(parse_family(family_name(Family::kCrn)), Family::kCrn);
  EXPECT_EQ(parse_domain(domain_name(Domain::kHybrid)), Domain::kHybrid);
  EXPECT_EQ(parse_input_mode(input_mode_name(InputMode::kRawComplex)), InputMode::kRawComplex);
  EXPECT_THROW(parse_domain("quaternion"), ConfigError);
}
