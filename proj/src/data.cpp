#include "hse/data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hse/error.h"
#include "hse/wav.h"

namespace hse {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::string& base_dir) {
  Manifest m;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("manifest line " + std::to_string(lineno) +
                          ": malformed section header");
      }
      section = line.substr(1, line.size() - 2);
      if (section != "speech" && section != "noise" && section != "synthetic") {
        throw ConfigError("manifest line " + std::to_string(lineno) +
                          ": unknown section [" + section + "]");
      }
      if (section == "synthetic") m.synthetic = true;
      continue;
    }
    if (section.empty()) {
      throw ConfigError("manifest line " + std::to_string(lineno) +
                        ": entry outside a section");
    }
    if (section == "synthetic") {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("manifest line " + std::to_string(lineno) +
                          ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key == "noise" && (val == "white" || val == "pink" || val == "mixed")) {
        m.synthetic_noise = val;
      } else if (key == "speech" && val == "harmonic") {
      } else {
        throw ConfigError("manifest line " + std::to_string(lineno) +
                          ": unsupported synthetic setting '" + line + "'");
      }
      continue;
    }
    fs::path p(line);
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    (section == "speech" ? m.speech : m.noise).push_back(p.string());
  }
  if (!m.synthetic && (m.speech.empty() || m.noise.empty())) {
    throw ConfigError(
        "manifest needs at least one [speech] and one [noise] file, or a "
        "[synthetic] section");
  }
  for (const auto& list : {m.speech, m.noise}) {
    for (const std::string& p : list) {
      if (!fs::exists(p)) throw ConfigError("manifest entry not found: " + p);
    }
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), fs::path(path).parent_path().string());
}

WavListSource::WavListSource(std::vector<std::string> paths)
    : paths_(std::move(paths)) {
  if (paths_.empty()) throw ConfigError("empty WAV list");
}

AudioClip WavListSource::draw_file(std::mt19937_64& rng) const {
  const std::size_t i =
      std::uniform_int_distribution<std::size_t>(0, paths_.size() - 1)(rng);
  auto it = cache_.find(i);
  if (it == cache_.end()) it = cache_.emplace(i, wav_read(paths_[i])).first;
  return it->second;
}

AudioClip SyntheticSpeech::draw_file(std::mt19937_64& rng) const {
  const double sr = kSampleRate;
  const std::size_t n = static_cast<std::size_t>(uniform(rng, 1.5, 3.5) * sr);
  const double f0_base = uniform(rng, 95.0, 220.0);
  const double vib_rate = uniform(rng, 3.0, 6.0);
  const double vib_depth = uniform(rng, 0.01, 0.04);
  std::normal_distribution<double> gauss(0.0, 1.0);

  AudioClip clip;
  clip.samples.assign(n, 0.0);
  std::size_t pos = 0;
  double phase = 0.0;
  while (pos < n) {
    if (uniform(rng, 0.0, 1.0) < 0.2) {  // pause
      pos += static_cast<std::size_t>(uniform(rng, 0.05, 0.2) * sr);
      continue;
    }
    const std::size_t len =
        std::min(n - pos, static_cast<std::size_t>(uniform(rng, 0.12, 0.3) * sr));
    const double f1 = uniform(rng, 300.0, 850.0);
    const double f2 = uniform(rng, 900.0, 2300.0);
    const double f3 = uniform(rng, 2300.0, 3200.0);
    const double level = uniform(rng, 0.5, 1.0);
    const double glide = uniform(rng, -0.15, 0.15);
    const double breath = uniform(rng, 0.0, 0.05);
    for (std::size_t i = 0; i < len; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(len);
      const double t = static_cast<double>(pos + i) / sr;
      const double f0 = f0_base * (1.0 + glide * (u - 0.5)) *
                        (1.0 + vib_depth * std::sin(2.0 * M_PI * vib_rate * t));
      phase += 2.0 * M_PI * f0 / sr;
      double v = 0.0;
      for (int h = 1; h * f0 < 0.45 * sr; ++h) {
        const double f = h * f0;
        auto res = [f](double fc, double bw) {
          const double d = (f - fc) / bw;
          return 1.0 / (1.0 + d * d);
        };
        const double amp = (res(f1, 90.0) + 0.7 * res(f2, 120.0) +
                            0.4 * res(f3, 160.0) + 0.02) /
                           std::sqrt(static_cast<double>(h));
        v += amp * std::sin(h * phase);
      }
      const double env = std::sin(M_PI * u);
      clip.samples[pos + i] = level * env * (v + breath * gauss(rng));
    }
    pos += len;
  }
  double peak = 0.0;
  for (double x : clip.samples) peak = std::max(peak, std::abs(x));
  if (peak > 0) {
    for (double& x : clip.samples) x *= 0.5 / peak;
  }
  return clip;
}

AudioClip white_noise(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 0.1);
  AudioClip c;
  c.samples.resize(n);
  for (double& x : c.samples) x = gauss(rng);
  return c;
}

AudioClip pink_noise(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  AudioClip c;
  c.samples.resize(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (double& x : c.samples) {
    const double w = gauss(rng);
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    x = 0.02 * (b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362);
    b6 = w * 0.115926;
  }
  return c;
}

SyntheticNoise::SyntheticNoise(std::string kind) : kind_(std::move(kind)) {
  if (kind_ != "white" && kind_ != "pink" && kind_ != "mixed") {
    throw ConfigError("unknown synthetic noise '" + kind_ + "'");
  }
}

AudioClip SyntheticNoise::draw_file(std::mt19937_64& rng) const {
  const std::size_t n = static_cast<std::size_t>(uniform(rng, 3.0, 12.0) * kSampleRate);
  std::string kind = kind_;
  if (kind == "mixed") kind = uniform(rng, 0.0, 1.0) < 0.5 ? "white" : "pink";
  AudioClip c = kind == "white" ? white_noise(n, rng) : pink_noise(n, rng);
  // Slow level fluctuation keeps the noise mildly non-stationary.
  const double rate = uniform(rng, 0.1, 0.5);
  const double depth = uniform(rng, 0.0, 0.3);
  const double ph = uniform(rng, 0.0, 2.0 * M_PI);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples[i] *= 1.0 + depth * std::sin(2.0 * M_PI * rate * i / kSampleRate + ph);
  }
  return c;
}

AudioClip assemble(const ClipSource& src, std::size_t length,
                   std::mt19937_64& rng) {
  AudioClip out;
  out.samples.reserve(length);
  int misses = 0;
  while (out.samples.size() < length) {
    AudioClip f = src.draw_file(rng);
    const double dur = uniform(rng, 0.2, 0.3);
    if (f.samples.size() <= 2 * static_cast<std::size_t>(std::lround(dur * kSampleRate))) {
      if (++misses > 1000) {
        throw ConfigError("insufficient source audio: files too short to fade");
      }
      continue;
    }
    f = apply_fade(f, dur);
    const std::size_t take = std::min(f.samples.size(), length - out.samples.size());
    out.samples.insert(out.samples.end(), f.samples.begin(),
                       f.samples.begin() + static_cast<long>(take));
  }
  return out;
}

TrainingPair make_training_pair(const ClipSource& speech,
                                const ClipSource& noise, std::uint64_t seed,
                                std::size_t length) {
  std::mt19937_64 rng(seed);
  TrainingPair p;
  p.clean = assemble(speech, length, rng);
  const AudioClip v = assemble(noise, length, rng);
  p.snr_db = uniform(rng, -5.0, 20.0);
  p.noisy = mix_at_snr(p.clean, v, p.snr_db).mixture;
  return p;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the three words
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

FixedPairs::FixedPairs(std::vector<TrainingPair> pairs) : pairs_(std::move(pairs)) {
  if (pairs_.empty()) throw ConfigError("no training pairs");
}

TrainingPair FixedPairs::get(std::uint64_t, std::size_t index) const {
  return pairs_.at(index % pairs_.size());
}

GeneratedPairs::GeneratedPairs(std::shared_ptr<ClipSource> speech,
                               std::shared_ptr<ClipSource> noise,
                               std::uint64_t seed, std::size_t per_epoch,
                               std::size_t length)
    : speech_(std::move(speech)),
      noise_(std::move(noise)),
      seed_(seed),
      per_epoch_(per_epoch),
      length_(length) {
  if (per_epoch_ == 0) throw ConfigError("pairs per epoch must be positive");
}

TrainingPair GeneratedPairs::get(std::uint64_t epoch, std::size_t index) const {
  return make_training_pair(*speech_, *noise_, derive_seed(seed_, epoch, index),
                            length_);
}

Sources sources_from(const Manifest& m) {
  Sources s;
  s.speech = m.speech.empty()
                 ? std::shared_ptr<ClipSource>(std::make_shared<SyntheticSpeech>())
                 : std::make_shared<WavListSource>(m.speech);
  s.noise = m.noise.empty()
                ? std::shared_ptr<ClipSource>(
                      std::make_shared<SyntheticNoise>(m.synthetic_noise))
                : std::make_shared<WavListSource>(m.noise);
  return s;
}

}  // namespace hse
