#include "hse/calibration.h"

#include <cmath>
#include <cstdio>
#include <optional>

#include "hse/complexity.h"
#include "hse/error.h"
#include "hse/shipped.h"

namespace hse {

namespace {

struct Candidate {
  Geometry g;
  std::size_t params[2];  // single model, or complex and hybrid
  std::uint64_t macs[2];
};

std::optional<std::pair<std::size_t, std::uint64_t>> measure(ModelSpec s,
                                                             const Geometry& g) {
  s.geometry = g;
  try {
    validate(s);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
  const ComplexityReport r = count_macs(s, kDefaultFrames, MacCosts::zero());
  return std::make_pair(r.params, r.macs_total());
}

std::vector<Geometry> geometries() {
  std::vector<Geometry> out;
  for (std::size_t k = 3; k <= 10; ++k) {
    for (std::size_t p = 0; p < k; ++p) {
      for (unsigned mask = 0; mask < 16; ++mask) {
        Geometry g{k, p, {}};
        for (int i = 0; i < 4; ++i) g.strides.push_back((mask >> (3 - i)) & 1 ? 3 : 2);
        out.push_back(g);
      }
    }
  }
  return out;
}

std::size_t stride3(const Geometry& g) {
  std::size_t n = 0;
  for (std::size_t s : g.strides) n += s == 3;
  return n;
}

}  // namespace

CalibrationTargets calibration_targets(Family f) {
  if (f == Family::kCdae) {
    return {{173300, 171500, 172200}, {4.72e9, 4.54e9, 3.31e9}};
  }
  return {{816000, 815000, 816000}, {6.88e9, 8.04e9, 5.51e9}};
}

CalibrationResult calibrate(Family f) {
  const bool cdae = f == Family::kCdae;
  const ModelSpec rs = shipped_spec(cdae ? "rCDAE" : "rCRN");
  const ModelSpec cs = shipped_spec(cdae ? "cCDAE" : "cCRN");
  const ModelSpec hs = shipped_spec(cdae ? "hCDAE" : "hCRN");
  const CalibrationTargets t = calibration_targets(f);

  std::vector<Candidate> reals, shared;
  for (const Geometry& g : geometries()) {
    if (auto r = measure(rs, g)) {
      reals.push_back({g, {r->first, 0}, {r->second, 0}});
    }
    auto c = measure(cs, g);
    auto h = c ? measure(hs, g) : std::nullopt;
    if (c && h) {
      shared.push_back({g, {c->first, h->first}, {c->second, h->second}});
    }
  }

  std::optional<CalibrationResult> best;
  for (const Candidate& r : reals) {
    for (const Candidate& c : shared) {
      const double ps[3] = {double(r.params[0]), double(c.params[0]),
                            double(c.params[1])};
      const double ms[3] = {double(r.macs[0]), double(c.macs[0]),
                            double(c.macs[1])};
      const double hi = std::max({ps[0], ps[1], ps[2]});
      const double lo = std::min({ps[0], ps[1], ps[2]});
      if ((hi - lo) / hi > 0.015) continue;
      bool near = true;
      for (int i = 0; i < 3; ++i) {
        near = near && std::abs(ps[i] - t.params[i]) / t.params[i] <= 0.05;
      }
      if (!near) continue;
      if (!(ms[2] < 0.98 * std::min(ms[0], ms[1]))) continue;
      if (cdae ? !(ms[1] < ms[0]) : !(ms[0] < ms[1])) continue;
      double obj = 0.01 * static_cast<double>(stride3(r.g) + stride3(c.g));
      for (int i = 0; i < 3; ++i) {
        obj += std::abs(ps[i] - t.params[i]) / t.params[i];
        obj += 0.1 * std::abs(std::log(ms[i] / t.macs[i]));
      }
      if (!best || obj < best->objective) {
        CalibrationResult res;
        res.real = r.g;
        res.shared = c.g;
        res.objective = obj;
        res.params[0] = r.params[0];
        res.params[1] = c.params[0];
        res.params[2] = c.params[1];
        res.macs[0] = r.macs[0];
        res.macs[1] = c.macs[0];
        res.macs[2] = c.macs[1];
        best = res;
      }
    }
  }
  if (!best) throw BudgetError("no geometry satisfies the calibration gates");
  return *best;
}

std::string render_calibration(Family f, const CalibrationResult& r) {
  auto geo = [](const Geometry& g) {
    std::string s = "k=" + std::to_string(g.kernel) + " p=" + std::to_string(g.pad) + " s=(";
    for (std::size_t i = 0; i < g.strides.size(); ++i) {
      s += (i ? "," : "") + std::to_string(g.strides[i]);
    }
    return s + ")";
  };
  const CalibrationTargets t = calibration_targets(f);
  std::string out = std::string(family_name(f)) + ": real " + geo(r.real) +
                    ", complex/hybrid " + geo(r.shared) + "\n";
  const char* labels[3] = {"real", "complex", "hybrid"};
  char buf[160];
  for (int i = 0; i < 3; ++i) {
    std::snprintf(buf, sizeof buf, "  %-8s params %8zu (ref %.0f)  MACs %.3f G (ref %.2f G)\n",
                  labels[i], r.params[i], t.params[i], r.macs[i] / 1e9,
                  t.macs[i] / 1e9);
    out += buf;
  }
  return out;
}

}  // namespace hse
