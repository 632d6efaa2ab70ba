#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hse/data.h"
#include "hse/dsp.h"
#include "hse/error.h"
#include "hse/metrics.h"
#include "hse/wav.h"
#include "test_util.h"

using namespace hse;

namespace {

std::vector<double> gauss(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

AudioClip clip_of(std::vector<double> v) {
  AudioClip c;
  c.samples = std::move(v);
  return c;
}

std::string data_path(const std::string& name) {
  return std::string(HSE_TEST_DATA) + "/" + name;
}

}  // namespace

TEST(SiSdr, IdentityHitsCap) {
  const auto s = gauss(1000, 1);
  EXPECT_EQ(si_sdr(s, s), 100.0);
}

TEST(SiSdr, ScaleInvariant) {
  const auto s = gauss(1000, 2);
  auto x = gauss(1000, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s[i] + 0.3 * x[i];
  const double base = si_sdr(x, s);
  for (double a : {0.01, 0.5, 3.0, 1000.0}) {
    std::vector<double> y = x;
    for (double& v : y) v *= a;
    EXPECT_NEAR(si_sdr(y, s), base, 1e-9);
  }
}

TEST(SiSdr, OrthogonalNoiseEqualsSnr) {
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = gauss(2000, 10 + trial);
    auto e = gauss(2000, 50 + trial);
    double se = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      se += s[i] * e[i];
      ss += s[i] * s[i];
    }
    for (std::size_t i = 0; i < s.size(); ++i) e[i] -= se / ss * s[i];
    double ee = 0.0;
    for (double v : e) ee += v * v;
    const double snr = -5.0 + 2.5 * trial;
    const double g = std::sqrt(ss / ee / std::pow(10.0, snr / 10.0));
    std::vector<double> x(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) x[i] = s[i] + g * e[i];
    EXPECT_NEAR(si_sdr(x, s), snr, 1e-9);
  }
}

TEST(SiSdr, Errors) {
  EXPECT_THROW(si_sdr(gauss(5, 1), gauss(6, 1)), ShapeError);
  EXPECT_THROW(si_sdr(gauss(5, 1), std::vector<double>(5, 0.0)), NumericError);
  EXPECT_EQ(si_sdr(std::vector<double>(5, 0.0), gauss(5, 1)), -100.0);
}

TEST(MeasureSnr, Examples) {
  const AudioClip s = clip_of(gauss(4000, 1));
  EXPECT_NEAR(measure_snr(s, s), 0.0, 1e-12);
  AudioClip half = s;
  for (double& v : half.samples) v *= 0.5;
  EXPECT_NEAR(measure_snr(s, half), 20.0 * std::log10(2.0), 1e-12);
  const AudioClip v = clip_of(gauss(4000, 2, 3.0));
  for (double snr : {-5.0, 0.0, 12.5}) {
    EXPECT_NEAR(measure_snr(s, mix_at_snr(s, v, snr).scaled_noise), snr, 1e-9);
  }
}

TEST(Stoi, MatchesReferenceImplementation) {
  // Reference values from an independent implementation on the fixture pair.
  const AudioClip clean = wav_read(data_path("stoi_clean.wav"), 10000);
  const AudioClip noisy = wav_read(data_path("stoi_noisy.wav"), 10000);
  EXPECT_NEAR(stoi(noisy, clean), 0.8462832063560762, 1e-6);
  EXPECT_NEAR(stoi(clean, clean), 0.9999999999999056, 1e-6);
}

TEST(Stoi, SelfNearOneAndMonotoneInSnr) {
  const SyntheticSpeech speech;
  std::mt19937_64 rng(21);
  const AudioClip s = assemble(speech, 3 * kSampleRate, rng);
  EXPECT_GE(stoi(s, s), 0.999);
  const AudioClip v = white_noise(s.size(), rng);
  double prev = -1.0;
  for (double snr : {-10.0, -5.0, 0.0, 5.0, 10.0, 20.0}) {
    const double d = stoi(mix_at_snr(s, v, snr).mixture, s);
    EXPECT_GT(d, prev) << snr;
    prev = d;
  }
  EXPECT_LT(stoi(v, s), 0.4);
}

TEST(Stoi, Errors) {
  const AudioClip a = clip_of(gauss(1000, 1));
  EXPECT_THROW(stoi(a, clip_of(gauss(999, 1))), ShapeError);
  EXPECT_THROW(stoi(a, a), ConfigError);
}

TEST(SiSdrLoss, MatchesScalarAndGradient) {
  std::mt19937_64 rng(5);
  const Tensor s = hse::testing::random_tensor(Shape(2, 1, 1, 300), rng);
  Tensor x = hse::testing::random_tensor(Shape(2, 1, 1, 300), rng);
  x = x + s;
  const double l = si_sdr_loss(x, s).item();
  const auto xv = x.vec(), sv = s.vec();
  const double expect =
      -0.5 * (si_sdr(std::vector<double>(xv.begin(), xv.begin() + 300), std::vector<double>(sv.begin(), sv.begin() + 300)) +
              si_sdr(std::vector<double>(xv.begin() + 300, xv.end()), std::vector<double>(sv.begin() + 300, sv.end())));
  EXPECT_NEAR(l, expect, 1e-9);
  EXPECT_LT(hse::testing::grad_check([&](const Tensor& t) { return si_sdr_loss(t, s); }, x), 1e-5);
}

TEST(SiSdrLoss, GradientThroughInverseStft) {
  const SyntheticSpeech speech;
  std::mt19937_64 rng(6);
  const AudioClip clean = assemble(speech, kSampleRate / 2, rng);
  const AudioClip noise = white_noise(clean.size(), rng);
  const Spectrogram y = stft(mix_at_snr(clean, noise, 5.0).mixture);
  const AudioClip ref = interior(clean, y.frames());
  const Tensor r(Shape(1, 1, 1, ref.size()), ref.samples);
  EXPECT_LT(hse::testing::grad_check([&](const Tensor& re) {
              return si_sdr_loss(istft_interior({re, y.bins.im}), r);
            }, y.bins.re), 1e-5);
}

TEST(Summary, MeansAndNanExclusion) {
  std::vector<ClipMetrics> clips = {
      {"a", 0.0, 10.0, 0.8}, {"b", 0.0, 20.0, 0.6}, {"c", 0.0, std::nan(""), 0.5}, {"d", 5.0, 1.0, 0.1}};
  const auto s = summarize(clips, {0.0, 5.0, 10.0});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].clips, 2u);
  EXPECT_EQ(s[0].nan_excluded, 1u);
  EXPECT_DOUBLE_EQ(s[0].si_sdr, 15.0);
  EXPECT_DOUBLE_EQ(s[0].stoi, 0.7);
  EXPECT_EQ(s[1].clips, 1u);
  EXPECT_TRUE(std::isnan(s[2].si_sdr));
}

TEST(Summary, RenderTableAndCsv) {
  const auto b = summarize({{"a", -5.0, 3.0, 0.5}, {"b", 20.0, 15.0, 0.9}}, {-5.0, 20.0});
  const std::string t = render_metric_table({{"Noisy", b}});
  EXPECT_NE(t.find("-5 dB"), std::string::npos);
  EXPECT_NE(t.find("STOI"), std::string::npos);
  EXPECT_NE(t.find("0.900"), std::string::npos);
  const std::string c = render_metric_csv({{"Noisy", {"a", -5.0, 3.0, 0.5}}});
  EXPECT_EQ(c, "row,clip_id,snr_bucket,si_sdr,stoi\nNoisy,a,-5,3.000000,0.500000\n");
}
