#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "hse/data.h"
#include "hse/error.h"
#include "hse/wav.h"

using namespace hse;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "hse_data_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Manifest, ParsesSectionsAndComments) {
  const fs::path d = temp_dir();
  AudioClip c;
  c.samples.assign(16000, 0.1);
  wav_write((d / "s.wav").string(), c, WavFormat::kPcm16);
  wav_write((d / "n.wav").string(), c, WavFormat::kPcm16);
  const Manifest m = parse_manifest("# list\n[speech]\ns.wav  # one\n\n[noise]\nn.wav\n", d.string());
  ASSERT_EQ(m.speech.size(), 1u);
  ASSERT_EQ(m.noise.size(), 1u);
  EXPECT_EQ(fs::path(m.speech[0]), d / "s.wav");
  EXPECT_FALSE(m.synthetic);
}

TEST(Manifest, Synthetic) {
  const Manifest m = parse_manifest("[synthetic]\nspeech = harmonic\nnoise = pink\n", "");
  EXPECT_TRUE(m.synthetic);
  EXPECT_EQ(m.synthetic_noise, "pink");
  const Sources s = sources_from(m);
  EXPECT_NE(s.speech, nullptr);
  EXPECT_NE(s.noise, nullptr);
}

TEST(Manifest, Errors) {
  EXPECT_THROW(parse_manifest("[speech]\n", ""), ConfigError);
  EXPECT_THROW(parse_manifest("[music]\n", ""), ConfigError);
  EXPECT_THROW(parse_manifest("a.wav\n", ""), ConfigError);
  EXPECT_THROW(parse_manifest("[speech\n", ""), ConfigError);
  EXPECT_THROW(parse_manifest("[synthetic]\nnoise = brown\n", ""), ConfigError);
  EXPECT_THROW(parse_manifest("[speech]\nmissing.wav\n[noise]\nmissing.wav\n", temp_dir().string()), ConfigError);
  EXPECT_THROW(load_manifest((temp_dir() / "none.txt").string()), ConfigError);
}

TEST(Pairs, DeterministicLengthAndSnrRange) {
  const SyntheticSpeech speech;
  const SyntheticNoise noise;
  const TrainingPair a = make_training_pair(speech, noise, 42);
  const TrainingPair b = make_training_pair(speech, noise, 42);
  EXPECT_EQ(a.noisy.samples, b.noisy.samples);
  EXPECT_EQ(a.clean.samples, b.clean.samples);
  EXPECT_EQ(a.clean.size(), 160000u);
  EXPECT_EQ(a.noisy.size(), 160000u);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const TrainingPair p = make_training_pair(speech, noise, s, 8000);
    EXPECT_GE(p.snr_db, -5.0);
    EXPECT_LE(p.snr_db, 20.0);
    EXPECT_EQ(p.clean.size(), 8000u);
  }
}

TEST(Pairs, RealizedSnrMatchesDraw) {
  const SyntheticSpeech speech;
  const SyntheticNoise noise("white");
  const TrainingPair p = make_training_pair(speech, noise, 5, 16000);
  double ps = 0.0, pv = 0.0;
  for (std::size_t i = 0; i < p.clean.size(); ++i) {
    ps += p.clean.samples[i] * p.clean.samples[i];
    const double v = p.noisy.samples[i] - p.clean.samples[i];
    pv += v * v;
  }
  EXPECT_NEAR(10.0 * std::log10(ps / pv), p.snr_db, 1e-9);
}

TEST(Pairs, GeneratedProviderRegenerates) {
  auto s = std::make_shared<SyntheticSpeech>();
  auto n = std::make_shared<SyntheticNoise>();
  const GeneratedPairs g(s, n, 3, 4, 4000);
  EXPECT_EQ(g.pairs_per_epoch(), 4u);
  EXPECT_EQ(g.get(2, 1).noisy.samples, g.get(2, 1).noisy.samples);
  EXPECT_NE(g.get(2, 1).noisy.samples, g.get(3, 1).noisy.samples);
  EXPECT_THROW(GeneratedPairs(s, n, 3, 0), ConfigError);
}

TEST(Pairs, FixedProviderCycles) {
  const SyntheticSpeech speech;
  const SyntheticNoise noise;
  const FixedPairs f({make_training_pair(speech, noise, 1, 4000), make_training_pair(speech, noise, 2, 4000)});
  EXPECT_EQ(f.get(0, 2).clean.samples, f.get(7, 0).clean.samples);
  EXPECT_THROW(FixedPairs({}), ConfigError);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(9, a, b));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
}

TEST(Assemble, FillsExactLength) {
  const SyntheticSpeech speech;
  std::mt19937_64 rng(4);
  EXPECT_EQ(assemble(speech, 70001, rng).size(), 70001u);
}

TEST(Noise, LevelsAreSane) {
  std::mt19937_64 rng(1);
  const AudioClip w = white_noise(100000, rng);
  EXPECT_NEAR(std::sqrt(power(w.samples)), 0.1, 0.002);
  const AudioClip p = pink_noise(100000, rng);
  EXPECT_GT(power(p.samples), 0.0);
}
