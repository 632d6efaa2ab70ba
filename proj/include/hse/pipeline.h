#pragma once

#include <vector>

#include "hse/data.h"
#include "hse/dsp.h"
#include "hse/model.h"

namespace hse {

// Enhanced interior samples: stft -> model input -> forward -> apply_output
// on the raw-scale spectrum -> istft. The first 256 samples and the tail
// past (T-1)*128 are trimmed.
AudioClip enhance(const Model& model, const AudioClip& noisy);

// Batched time-domain estimate (B, 1, 1, L) and the matching clean interiors.
struct BatchTensors {
  Tensor estimate;
  Tensor reference;
};

// All pairs must have equal length. The estimate is tracked when the
// model's parameters are bound to a tape.
BatchTensors run_batch(const Model& model, const std::vector<TrainingPair>& pairs);

}  // namespace hse
