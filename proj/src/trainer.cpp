#include "hse/trainer.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hse/error.h"
#include "hse/metrics.h"
#include "hse/pipeline.h"

namespace hse {

namespace fs = std::filesystem;

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(cfg.lr_init > 0.0) || !(cfg.lr_final > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (cfg.lr_final > cfg.lr_init) {
    throw ConfigError("lr_final must not exceed lr_init");
  }
  if (cfg.weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be at least 1");
}

double lr_at(const TrainConfig& cfg, std::size_t epoch) {
  validate(cfg);
  if (epoch >= cfg.epochs) {
    throw ConfigError("epoch " + std::to_string(epoch) + " out of range [0, " +
                      std::to_string(cfg.epochs) + ")");
  }
  if (cfg.epochs == 1) return cfg.lr_init;
  const double u = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  return cfg.lr_init * std::pow(cfg.lr_final / cfg.lr_init, u);
}

void adam_step(std::vector<NamedTensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double weight_decay,
               bool coupled_l2, const AdamHyper& hyper) {
  if (grads.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(grads.size()) +
                     " gradients for " + std::to_string(params.size()) +
                     " parameters");
  }
  if (state.m.empty()) {
    for (const NamedTensor& p : params) {
      state.m.push_back(Tensor::zeros(p.tensor->shape()));
      state.v.push_back(Tensor::zeros(p.tensor->shape()));
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].tensor->shape() ||
        state.m[i].shape() != grads[i].shape()) {
      throw ShapeError("adam_step: shape mismatch for " + params[i].name);
    }
    for (double g : grads[i].vec()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter " + params[i].name);
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> w = params[i].tensor->vec();
    std::vector<double> m = state.m[i].vec();
    std::vector<double> v = state.v[i].vec();
    const std::vector<double>& g = grads[i].vec();
    for (std::size_t k = 0; k < w.size(); ++k) {
      double gk = g[k];
      if (coupled_l2) gk += weight_decay * w[k];
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * gk;
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * gk * gk;
      const double mh = m[k] / c1;
      const double vh = v[k] / c2;
      double upd = mh / (std::sqrt(vh) + hyper.eps);
      if (!coupled_l2) upd += weight_decay * w[k];
      w[k] -= lr * upd;
    }
    const Shape s = params[i].tensor->shape();
    *params[i].tensor = Tensor(s, std::move(w));
    state.m[i] = Tensor(s, std::move(m));
    state.v[i] = Tensor(s, std::move(v));
  }
}

Trainer::Trainer(Model& model, const PairProvider& train, TrainConfig cfg,
                 const PairProvider* eval)
    : model_(model), train_(train), eval_(eval), cfg_(std::move(cfg)) {
  validate(cfg_);
  if (!cfg_.out_dir.empty()) fs::create_directories(cfg_.out_dir);
}

void Trainer::resume(const Checkpoint& ckpt) {
  if (spec_hash(ckpt.spec) != spec_hash(model_.spec())) {
    throw GeometryError("checkpoint was written for model '" + ckpt.spec.name +
                        "', not '" + model_.spec().name + "'");
  }
  Model loaded = model_from_checkpoint(ckpt);
  model_.set_parameter_values(loaded.parameter_values());
  adam_ = ckpt.adam;
  epochs_done_ = ckpt.epochs_done;
  history_ = ckpt.history;
  if (epochs_done_ > cfg_.epochs) {
    throw ConfigError("checkpoint already has " + std::to_string(epochs_done_) +
                      " epochs, configured for " + std::to_string(cfg_.epochs));
  }
}

double Trainer::step(const std::vector<TrainingPair>& pairs, double lr) {
  Tape tape;
  model_.bind(tape);
  const BatchTensors bt = run_batch(model_, pairs);
  const Tensor loss = si_sdr_loss(bt.estimate, bt.reference);
  const double value = loss.item();
  if (!std::isfinite(value)) {
    model_.unbind();
    throw NumericError("non-finite loss");
  }
  const Gradients grads = tape.backward(loss, GradRetention::kLeaves);
  std::vector<NamedTensor> params = model_.parameters();
  std::vector<Tensor> g;
  for (const NamedTensor& p : params) {
    g.push_back(grads.contains(*p.tensor) ? grads.of(*p.tensor)
                                          : Tensor::zeros(p.tensor->shape()));
  }
  model_.unbind();
  params = model_.parameters();
  adam_step(params, g, adam_, lr, cfg_.weight_decay, cfg_.coupled_l2);
  return value;
}

HistoryRow Trainer::run_epoch() {
  if (epochs_done_ >= cfg_.epochs) throw ConfigError("all epochs already run");
  const std::size_t epoch = epochs_done_;
  const double lr = lr_at(cfg_, epoch);
  const std::size_t n = train_.pairs_per_epoch();
  if (n == 0) throw ConfigError("training data is exhausted");
  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < n; i += cfg_.batch_size) {
    std::vector<TrainingPair> batch;
    for (std::size_t j = i; j < std::min(n, i + cfg_.batch_size); ++j) {
      batch.push_back(train_.get(epoch, j));
    }
    double loss = 0.0;
    try {
      loss = step(batch, lr);
    } catch (const NumericError&) {
      write_artifacts();
      throw;
    }
    step_losses_.push_back(loss);
    if (on_step) on_step(epoch, steps, loss);
    total += loss;
    ++steps;
  }
  HistoryRow row;
  row.epoch = static_cast<std::uint32_t>(epoch);
  row.lr = lr;
  row.mean_loss = total / static_cast<double>(steps);
  row.eval_si_sdr = row.eval_stoi = std::nan("");
  if (eval_ && cfg_.eval_pairs > 0) {
    std::tie(row.eval_si_sdr, row.eval_stoi) = evaluate();
  }
  history_.push_back(row);
  ++epochs_done_;
  write_artifacts();
  return row;
}

const std::vector<HistoryRow>& Trainer::train() {
  while (epochs_done_ < cfg_.epochs) run_epoch();
  return history_;
}

std::pair<double, double> Trainer::evaluate() const {
  if (!eval_) throw ConfigError("no evaluation data");
  double sdr = 0.0, st = 0.0;
  std::size_t sdr_n = 0, st_n = 0;
  for (std::size_t i = 0; i < cfg_.eval_pairs; ++i) {
    const TrainingPair p = eval_->get(0, i);
    const AudioClip out = enhance(model_, p.noisy);
    const AudioClip ref = interior(p.clean, frame_count(p.clean.size()));
    const double s = si_sdr(out, ref);
    if (std::isfinite(s)) {
      sdr += s;
      ++sdr_n;
    }
    try {
      const double q = stoi(out, ref);
      if (std::isfinite(q)) {
        st += q;
        ++st_n;
      }
    } catch (const ConfigError&) {
    }
  }
  return {sdr_n ? sdr / sdr_n : std::nan(""), st_n ? st / st_n : std::nan("")};
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c = make_checkpoint(model_);
  c.adam = adam_;
  c.epochs_done = static_cast<std::uint32_t>(epochs_done_);
  c.history = history_;
  return c;
}

void Trainer::write_artifacts() const {
  if (cfg_.out_dir.empty()) return;
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%03zu.ckpt", epochs_done_);
  const Checkpoint c = checkpoint();
  save_checkpoint(c, (fs::path(cfg_.out_dir) / name).string());
  save_checkpoint(c, (fs::path(cfg_.out_dir) / "last.ckpt").string());
  std::ofstream log(fs::path(cfg_.out_dir) / "history.log");
  if (!log) throw IoError("cannot write history.log in " + cfg_.out_dir);
  log << render_history(history_);
}

std::string render_history(const std::vector<HistoryRow>& rows) {
  std::ostringstream os;
  os << "epoch lr mean_loss eval_si_sdr eval_stoi\n";
  char buf[160];
  for (const HistoryRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%u %.6e %.6f %.4f %.4f\n", r.epoch, r.lr,
                  r.mean_loss, r.eval_si_sdr, r.eval_stoi);
    os << buf;
  }
  return os.str();
}

}  // namespace hse
