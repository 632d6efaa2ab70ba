#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hse/model.h"
#include "hse/model_spec.h"

namespace hse {

struct HistoryRow {
  std::uint32_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double eval_si_sdr = 0.0;  // NaN when no evaluation ran
  double eval_stoi = 0.0;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

struct Checkpoint {
  ModelSpec spec;
  std::vector<std::string> names;
  std::vector<Tensor> params;
  AdamState adam;
  std::uint32_t epochs_done = 0;
  std::vector<HistoryRow> history;
};

// Byte layout documented in docs/checkpoint_format.md.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(Model& model);
// Builds the model and loads the parameters, checking names and shapes.
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace hse
