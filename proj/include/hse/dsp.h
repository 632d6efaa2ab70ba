#pragma once

#include <cstddef>
#include <vector>

#include "hse/model_spec.h"
#include "hse/tensor.h"

namespace hse {

inline constexpr int kSampleRate = 16000;
inline constexpr std::size_t kFftSize = 256;
inline constexpr std::size_t kHop = 128;
inline constexpr std::size_t kBins = kFftSize / 2 + 1;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Windowed-sinc polyphase resampler (Kaiser window). Output length is
// ceil(n * to / from).
AudioClip resample(const AudioClip& clip, int to_rate);

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// (1, 1, 129, T) complex bins. Frames start at t * 128 without padding and
// are scaled by 2/256 so a full-scale sinusoid peaks near 0 dB.
struct Spectrogram {
  ComplexTensor bins;
  std::size_t length = 0;  // samples of the analysed signal
  int sample_rate = kSampleRate;

  std::size_t frames() const { return bins.shape()[kTime]; }
};

std::size_t frame_count(std::size_t samples);
// Samples the overlap-add reconstructs exactly: [256, (T-1)*128).
std::size_t interior_begin();
std::size_t interior_end(std::size_t frames);

Spectrogram stft(const AudioClip& clip);
// Full-length overlap-add; only the interior is exact.
AudioClip istft(const Spectrogram& spec);
// Differentiable inverse of (B, 1, 129, T) bins; returns the interior
// samples as (B, 1, 1, L).
Tensor istft_interior(const ComplexTensor& bins);
// Interior slice of a clip analysed into `frames` frames.
AudioClip interior(const AudioClip& clip, std::size_t frames);

struct NormalizedSpec {
  Tensor mag01;         // clamp((20 log10(|Y| + 1e-8) + 80) / 80, 0, 1)
  ComplexTensor phase;  // Y / |Y|, zero where |Y| = 0
};

inline constexpr double kFloorDb = -80.0;
inline constexpr double kMagEps = 1e-8;

NormalizedSpec normalize(const ComplexTensor& y);
ComplexTensor denormalize(const NormalizedSpec& n);
// Inverse warp for an estimate made on the warped scale, measured from the
// -80 dB floor: |S| -> 1e-4 (10^(4|S|) - 1), phase kept, 0 -> 0.
ComplexTensor denormalize_correction(const ComplexTensor& s);

// mag01 * phase for kWarped, Y itself for kRawComplex.
ComplexTensor model_input(const ComplexTensor& y, InputMode mode);

struct MixResult {
  AudioClip mixture;
  AudioClip scaled_noise;  // g * v
  double gain = 0.0;
};

double power(const std::vector<double>& x);
// y = s + g v with g = sqrt(P_s / (P_v 10^(snr/10))).
MixResult mix_at_snr(const AudioClip& speech, const AudioClip& noise,
                     double snr_db);

// Rising / falling halves of a Hann window over the first and last
// round(dur_s * rate) samples.
AudioClip apply_fade(const AudioClip& clip, double dur_s);

}  // namespace hse
