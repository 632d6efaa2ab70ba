#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hse/checkpoint.h"
#include "hse/data.h"
#include "hse/model.h"

namespace hse {

struct TrainConfig {
  std::size_t epochs = 100;
  double lr_init = 1e-3;
  double lr_final = 1e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  // Adds wd * param to the gradient instead of the decoupled update.
  bool coupled_l2 = false;
  // Checkpoints and history.log go here; empty disables writing.
  std::string out_dir;
  // Held-out pairs scored after every epoch; 0 disables evaluation.
  std::size_t eval_pairs = 0;
};

void validate(const TrainConfig& cfg);

// lr_init * (lr_final / lr_init)^(epoch / (epochs - 1)).
double lr_at(const TrainConfig& cfg, std::size_t epoch);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of every parameter in place. Moments are
// created on first use. Throws NumericError naming a parameter with a
// non-finite gradient.
void adam_step(std::vector<NamedTensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double weight_decay,
               bool coupled_l2 = false, const AdamHyper& hyper = {});

struct StepResult {
  double loss = 0.0;
};

class Trainer {
 public:
  // `eval` may be null. Neither provider is owned.
  Trainer(Model& model, const PairProvider& train, TrainConfig cfg,
          const PairProvider* eval = nullptr);

  // Restores parameters, optimizer state and history.
  void resume(const Checkpoint& ckpt);

  // One optimizer step on `pairs` at learning rate `lr`; returns the loss
  // before the update.
  double step(const std::vector<TrainingPair>& pairs, double lr);

  // Runs the next epoch, appends to the history and writes artifacts.
  HistoryRow run_epoch();
  // Runs the remaining epochs.
  const std::vector<HistoryRow>& train();

  // Mean SI-SDR and STOI of the enhanced held-out pairs.
  std::pair<double, double> evaluate() const;

  std::size_t epochs_done() const { return epochs_done_; }
  const std::vector<HistoryRow>& history() const { return history_; }
  const std::vector<double>& step_losses() const { return step_losses_; }
  Checkpoint checkpoint() const;

  // Called after every optimizer step with (epoch, step in epoch, loss).
  std::function<void(std::size_t, std::size_t, double)> on_step;

 private:
  void write_artifacts() const;

  Model& model_;
  const PairProvider& train_;
  const PairProvider* eval_;
  TrainConfig cfg_;
  AdamState adam_;
  std::size_t epochs_done_ = 0;
  std::vector<HistoryRow> history_;
  std::vector<double> step_losses_;
};

std::string render_history(const std::vector<HistoryRow>& rows);

}  // namespace hse
