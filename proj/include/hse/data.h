#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hse/dsp.h"

namespace hse {

inline constexpr std::size_t kPairSamples = 10 * kSampleRate;

// Plain-text manifest:
//   [speech]      one WAV path per line
//   [noise]       one WAV path per line
//   [synthetic]   optional `speech = harmonic`, `noise = white|pink|mixed`
// Relative paths resolve against the manifest's directory; '#' starts a
// comment.
struct Manifest {
  std::vector<std::string> speech;
  std::vector<std::string> noise;
  bool synthetic = false;
  std::string synthetic_noise = "mixed";
};

Manifest parse_manifest(const std::string& text, const std::string& base_dir);
Manifest load_manifest(const std::string& path);

// A pool of source recordings; draw_file returns one at random.
class ClipSource {
 public:
  virtual ~ClipSource() = default;
  virtual AudioClip draw_file(std::mt19937_64& rng) const = 0;
};

class WavListSource : public ClipSource {
 public:
  explicit WavListSource(std::vector<std::string> paths);
  AudioClip draw_file(std::mt19937_64& rng) const override;

 private:
  std::vector<std::string> paths_;
  mutable std::map<std::size_t, AudioClip> cache_;
};

// Voiced "utterances": a drifting harmonic series shaped by per-syllable
// formants and a syllable-rate envelope, with short pauses.
class SyntheticSpeech : public ClipSource {
 public:
  AudioClip draw_file(std::mt19937_64& rng) const override;
};

class SyntheticNoise : public ClipSource {
 public:
  explicit SyntheticNoise(std::string kind = "mixed");
  AudioClip draw_file(std::mt19937_64& rng) const override;

 private:
  std::string kind_;
};

AudioClip white_noise(std::size_t n, std::mt19937_64& rng);
AudioClip pink_noise(std::size_t n, std::mt19937_64& rng);

// Faded source files concatenated until `length` samples, then truncated.
AudioClip assemble(const ClipSource& src, std::size_t length,
                   std::mt19937_64& rng);

struct TrainingPair {
  AudioClip noisy;
  AudioClip clean;
  double snr_db = 0.0;
};

TrainingPair make_training_pair(const ClipSource& speech,
                                const ClipSource& noise, std::uint64_t seed,
                                std::size_t length = kPairSamples);

// Per-(stream, epoch, index) seeds so any pair can be regenerated on resume.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

class PairProvider {
 public:
  virtual ~PairProvider() = default;
  virtual std::size_t pairs_per_epoch() const = 0;
  virtual TrainingPair get(std::uint64_t epoch, std::size_t index) const = 0;
};

// The same pairs every epoch.
class FixedPairs : public PairProvider {
 public:
  explicit FixedPairs(std::vector<TrainingPair> pairs);
  std::size_t pairs_per_epoch() const override { return pairs_.size(); }
  TrainingPair get(std::uint64_t epoch, std::size_t index) const override;

 private:
  std::vector<TrainingPair> pairs_;
};

// Freshly mixed pairs per epoch.
class GeneratedPairs : public PairProvider {
 public:
  GeneratedPairs(std::shared_ptr<ClipSource> speech,
                 std::shared_ptr<ClipSource> noise, std::uint64_t seed,
                 std::size_t per_epoch, std::size_t length = kPairSamples);
  std::size_t pairs_per_epoch() const override { return per_epoch_; }
  TrainingPair get(std::uint64_t epoch, std::size_t index) const override;

 private:
  std::shared_ptr<ClipSource> speech_;
  std::shared_ptr<ClipSource> noise_;
  std::uint64_t seed_;
  std::size_t per_epoch_;
  std::size_t length_;
};

struct Sources {
  std::shared_ptr<ClipSource> speech;
  std::shared_ptr<ClipSource> noise;
};

Sources sources_from(const Manifest& m);

}  // namespace hse
