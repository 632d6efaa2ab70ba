#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hse/error.h"
#include "hse/ops.h"
#include "hse/shipped.h"
#include "hse/trainer.h"

using namespace hse;
namespace fs = std::filesystem;

namespace {

// Owns the tensors a NamedTensor list points into.
struct Params {
  std::vector<Tensor> store;
  std::vector<NamedTensor> list;

  Params(std::vector<std::pair<std::string, std::vector<double>>> init) {
    store.reserve(init.size());
    for (auto& [name, v] : init) {
      store.emplace_back(Shape(1, 1, 1, v.size()), std::move(v));
      list.push_back({name, &store.back()});
    }
  }
  const Tensor& operator[](std::size_t i) const { return store[i]; }
};

std::vector<TrainingPair> small_pairs(std::size_t n, std::uint64_t seed) {
  const SyntheticSpeech speech;
  const SyntheticNoise noise;
  std::vector<TrainingPair> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_training_pair(speech, noise, seed + i, 4000));
  return out;
}

TrainConfig small_config(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 2;
  c.lr_init = 3e-3;
  c.lr_final = 1e-3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Schedule, EndpointsAndGeometricDecay) {
  TrainConfig c;
  EXPECT_DOUBLE_EQ(lr_at(c, 0), 1e-3);
  EXPECT_NEAR(lr_at(c, 99), 1e-4, 1e-18);
  const double r = lr_at(c, 1) / lr_at(c, 0);
  for (std::size_t e = 1; e + 1 < 100; ++e) EXPECT_NEAR(lr_at(c, e + 1) / lr_at(c, e), r, 1e-12);
  EXPECT_NEAR(std::pow(r, 99), 0.1, 1e-12);
  c.epochs = 3;
  EXPECT_NEAR(lr_at(c, 1), std::sqrt(1e-3 * 1e-4), 1e-18);
  EXPECT_THROW(lr_at(c, 3), ConfigError);
  c.epochs = 1;
  EXPECT_DOUBLE_EQ(lr_at(c, 0), 1e-3);
}

TEST(Schedule, InvalidConfigs) {
  TrainConfig c;
  c.epochs = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = TrainConfig{};
  c.lr_init = -1.0;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_NO_THROW(validate(TrainConfig{}));
}

TEST(Adam, ZeroGradientLeavesParamsWithoutDecay) {
  Params p({{"w", {1.0, -2.0}}});
  AdamState st;
  adam_step(p.list, {Tensor::zeros(p[0].shape())}, st, 1e-2, 0.0);
  EXPECT_EQ(p[0].vec(), (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLr) {
  Params p({{"w", {1.0, -2.0, 0.5}}});
  AdamState st;
  adam_step(p.list, {Tensor(p[0].shape(), {3.0, -0.01, 100.0})}, st, 1e-3, 0.0);
  EXPECT_NEAR(p[0][0], 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(p[0][1], -2.0 + 1e-3, 1e-8);
  EXPECT_NEAR(p[0][2], 0.5 - 1e-3, 1e-9);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, DescendsQuadratic) {
  Params p({{"w", {2.0}}});
  AdamState st;
  double prev = 4.0;
  for (int i = 0; i < 10; ++i) {
    adam_step(p.list, {scale(p[0], 2.0)}, st, 0.1, 0.0);
    const double f = p[0][0] * p[0][0];
    EXPECT_LT(f, prev);
    prev = f;
  }
}

TEST(Adam, MatchesScalarReference) {
  for (bool coupled : {false, true}) {
    Params p({{"a", {0.7, -1.3}}, {"b", {2.5}}});
    AdamState st;
    double w[3] = {0.7, -1.3, 2.5}, m[3] = {0, 0, 0}, v[3] = {0, 0, 0};
    const double lr = 5e-3, wd = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 100; ++t) {
      auto grad = [&](double x, int i) { return std::sin(3.0 * x + i) + 0.5 * x; };
      adam_step(p.list,
                {Tensor(Shape(1, 1, 1, 2), {grad(p[0][0], 0), grad(p[0][1], 1)}),
                 Tensor(Shape(1, 1, 1, 1), {grad(p[1][0], 2)})},
                st, lr, wd, coupled);
      for (int i = 0; i < 3; ++i) {
        double g = grad(w[i], i);
        if (coupled) g += wd * w[i];
        m[i] = b1 * m[i] + (1 - b1) * g;
        v[i] = b2 * v[i] + (1 - b2) * g * g;
        const double mh = m[i] / (1 - std::pow(b1, t));
        const double vh = v[i] / (1 - std::pow(b2, t));
        const double decay = coupled ? 0.0 : wd * w[i];
        w[i] -= lr * (mh / (std::sqrt(vh) + eps) + decay);
      }
    }
    EXPECT_NEAR(p[0][0], w[0], 1e-12);
    EXPECT_NEAR(p[0][1], w[1], 1e-12);
    EXPECT_NEAR(p[1][0], w[2], 1e-12);
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Params p({{"enc.conv0.weight", {1.0}}});
  AdamState st;
  set_finite_checks(false);
  const Tensor g = exp(Tensor::full(Shape(1, 1, 1, 1), 1000.0));
  set_finite_checks(true);
  try {
    adam_step(p.list, {g}, st, 1e-3, 0.0);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("enc.conv0.weight"), std::string::npos);
  }
}

TEST(Trainer, LossDecreasesOnFixedBatch) {
  Model m(shipped_spec("toy_hCDAE"));
  m.init(1);
  const FixedPairs data(small_pairs(2, 1));
  Trainer t(m, data, small_config(1));
  const auto pairs = small_pairs(2, 1);
  const double first = t.step(pairs, 1e-2);
  double last = first;
  for (int i = 0; i < 20; ++i) last = t.step(pairs, 1e-2);
  EXPECT_LT(last, first);
}

TEST(Trainer, DeterministicHistories) {
  auto run = [] {
    Model m(shipped_spec("toy_hCDAE"));
    m.init(3);
    const FixedPairs data(small_pairs(4, 10));
    Trainer t(m, data, small_config(2));
    t.train();
    return t.step_losses();
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);
}

TEST(Trainer, ResumeMatchesUninterrupted) {
  const fs::path dir = fs::temp_directory_path() / "hse_trainer_resume";
  fs::remove_all(dir);
  const FixedPairs data(small_pairs(4, 20));
  TrainConfig cfg = small_config(3);
  cfg.out_dir = dir.string();

  Model full(shipped_spec("toy_hCDAE"));
  full.init(9);
  Trainer a(full, data, cfg);
  a.train();
  EXPECT_TRUE(fs::exists(dir / "epoch_001.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "last.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "history.log"));

  const Checkpoint c = load_checkpoint((dir / "epoch_001.ckpt").string());
  EXPECT_EQ(c.epochs_done, 1u);
  Model part = model_from_checkpoint(c);
  TrainConfig cfg2 = cfg;
  cfg2.out_dir.clear();
  Trainer b(part, data, cfg2);
  b.resume(c);
  EXPECT_EQ(b.epochs_done(), 1u);
  b.train();
  ASSERT_EQ(b.history().size(), 3u);
  for (std::size_t e = 1; e < 3; ++e) {
    EXPECT_NEAR(b.history()[e].mean_loss, a.history()[e].mean_loss, 1e-6);
  }
  const auto pa = full.parameter_values(), pb = part.parameter_values();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t k = 0; k < pa[i].numel(); ++k) EXPECT_NEAR(pa[i][k], pb[i][k], 1e-6);
  }
}

TEST(Trainer, ResumeRejectsOtherModel) {
  Model m(shipped_spec("toy_hCDAE"));
  m.init(1);
  Model other(shipped_spec("toy_rCDAE"));
  other.init(1);
  const FixedPairs data(small_pairs(1, 1));
  Trainer t(m, data, small_config(1));
  EXPECT_THROW(t.resume(make_checkpoint(other)), GeometryError);
}

TEST(Trainer, EvaluationFillsHistory) {
  Model m(shipped_spec("toy_hCDAE"));
  m.init(1);
  const SyntheticSpeech speech;
  const SyntheticNoise noise;
  const FixedPairs data(small_pairs(2, 1));
  const FixedPairs eval({make_training_pair(speech, noise, 99, 3 * kSampleRate)});
  TrainConfig cfg = small_config(1);
  cfg.eval_pairs = 1;
  Trainer t(m, data, cfg, &eval);
  const HistoryRow r = t.run_epoch();
  EXPECT_TRUE(std::isfinite(r.eval_si_sdr));
  EXPECT_GT(r.eval_stoi, 0.0);
  EXPECT_LE(r.eval_stoi, 1.0);
  EXPECT_NE(render_history(t.history()).find("1"), std::string::npos);
}
