#pragma once

#include <string>
#include <vector>

#include "hse/model_spec.h"

namespace hse {

// Reference sizes a family is calibrated against, ordered real, complex,
// hybrid.
struct CalibrationTargets {
  double params[3];
  double macs[3];  // at kDefaultFrames
};

CalibrationTargets calibration_targets(Family f);

struct CalibrationResult {
  Geometry real;    // geometry of the real model
  Geometry shared;  // shared by the complex and hybrid models
  double objective = 0.0;
  std::size_t params[3] = {0, 0, 0};
  std::uint64_t macs[3] = {0, 0, 0};
};

// Searches kernel 3..10, pad 0..kernel-1 and per-layer strides in {2, 3} for
// the shipped widths of `f`. A candidate must keep every output pad valid,
// stay within 5% of the reference parameter counts, keep the three models
// within 1.5% of each other and keep the hybrid at least 2% cheaper in MACs
// than both others, with the reference MAC order between real and complex.
// Ranked by summed relative parameter error plus 0.1 x summed |log| MAC
// ratio plus 0.01 per stride-3 layer. Layer MACs only.
CalibrationResult calibrate(Family f);

std::string render_calibration(Family f, const CalibrationResult& r);

}  // namespace hse
