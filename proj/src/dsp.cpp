#include "hse/dsp.h"

#include <cmath>
#include <complex>
#include <numeric>

#include "hse/error.h"
#include "hse/fft.h"
#include "hse/ops.h"

namespace hse {

namespace {

RealFft& frame_fft() {
  thread_local RealFft fft(kFftSize);
  return fft;
}

// Spectra are stored scaled by 2/N.
constexpr double kSpecScale = 2.0 / static_cast<double>(kFftSize);

}  // namespace

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

AudioClip resample(const AudioClip& clip, int to_rate) {
  if (clip.sample_rate <= 0 || to_rate <= 0) {
    throw ConfigError("sample rates must be positive");
  }
  if (clip.sample_rate == to_rate) return clip;
  const long g = std::gcd(clip.sample_rate, to_rate);
  const long up = to_rate / g;
  const long down = clip.sample_rate / g;
  // Cutoff relative to the input Nyquist.
  const double fc = std::min(1.0, static_cast<double>(up) / down);
  const int zeros = 16;
  const double half = zeros / fc;  // half-width in input samples
  const double beta = 8.0;
  const double i0b = std::cyl_bessel_i(0.0, beta);

  const std::size_t n_in = clip.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      (static_cast<long long>(n_in) * up + down - 1) / down);
  AudioClip out;
  out.sample_rate = to_rate;
  out.samples.resize(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) * down / up;
    const long lo = static_cast<long>(std::ceil(t - half));
    const long hi = static_cast<long>(std::floor(t + half));
    double acc = 0.0;
    for (long n = std::max(0L, lo); n <= hi && n < static_cast<long>(n_in); ++n) {
      const double x = t - static_cast<double>(n);
      const double r = x / half;
      if (r <= -1.0 || r >= 1.0) continue;
      const double arg = M_PI * fc * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0b;
      acc += clip.samples[n] * fc * sinc * win;
    }
    out.samples[j] = acc;
  }
  return out;
}

std::size_t frame_count(std::size_t samples) {
  if (samples < kFftSize) {
    throw ConfigError("clip of " + std::to_string(samples) +
                      " samples is shorter than one 256-sample frame");
  }
  return (samples - kFftSize) / kHop + 1;
}

std::size_t interior_begin() { return kFftSize; }

std::size_t interior_end(std::size_t frames) {
  if (frames < 4) throw ConfigError("need at least 4 frames for an interior");
  return (frames - 1) * kHop;
}

Spectrogram stft(const AudioClip& clip) {
  const std::size_t frames = frame_count(clip.samples.size());
  const std::vector<double> w = hann_window(kFftSize);
  std::vector<double> re(kBins * frames), im(kBins * frames);
  std::vector<double> buf(kFftSize);
  std::vector<std::complex<double>> spec(kBins);
  RealFft& fft = frame_fft();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < kFftSize; ++n) {
      buf[n] = w[n] * clip.samples[t * kHop + n];
    }
    fft.forward(buf.data(), spec.data());
    for (std::size_t k = 0; k < kBins; ++k) {
      re[k * frames + t] = spec[k].real() * kSpecScale;
      im[k * frames + t] = spec[k].imag() * kSpecScale;
    }
  }
  Spectrogram s;
  const Shape shape(1, 1, kBins, frames);
  s.bins = {Tensor(shape, std::move(re)), Tensor(shape, std::move(im))};
  s.length = clip.samples.size();
  s.sample_rate = clip.sample_rate;
  return s;
}

namespace {

// Overlap-add of inverse frames for batch item b into out (length
// (T-1)*hop + N).
void overlap_add(const std::vector<double>& re, const std::vector<double>& im,
                 std::size_t b, std::size_t frames, double* out) {
  std::vector<std::complex<double>> spec(kBins);
  std::vector<double> frame(kFftSize);
  RealFft& fft = frame_fft();
  const std::size_t base = b * kBins * frames;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < kBins; ++k) {
      spec[k] = {re[base + k * frames + t] / kSpecScale,
                 im[base + k * frames + t] / kSpecScale};
    }
    fft.inverse(spec.data(), frame.data());
    for (std::size_t n = 0; n < kFftSize; ++n) out[t * kHop + n] += frame[n];
  }
}

}  // namespace

AudioClip istft(const Spectrogram& spec) {
  const Shape& s = spec.bins.shape();
  if (s[kBatch] != 1 || s[kChannel] != 1 || s[kFreq] != kBins) {
    throw ShapeError("istft expects (1, 1, 129, T) bins, got " + s.str());
  }
  const std::size_t frames = s[kTime];
  AudioClip out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign((frames - 1) * kHop + kFftSize, 0.0);
  overlap_add(spec.bins.re.vec(), spec.bins.im.vec(), 0, frames,
              out.samples.data());
  if (spec.length > out.samples.size()) out.samples.resize(spec.length, 0.0);
  return out;
}

Tensor istft_interior(const ComplexTensor& bins) {
  const Shape& s = bins.shape();
  if (s[kChannel] != 1 || s[kFreq] != kBins) {
    throw ShapeError("istft expects (B, 1, 129, T) bins, got " + s.str());
  }
  const std::size_t batch = s[kBatch];
  const std::size_t frames = s[kTime];
  const std::size_t full = (frames - 1) * kHop + kFftSize;
  const std::size_t begin = interior_begin();
  const std::size_t end = interior_end(frames);
  const std::size_t len = end - begin;

  std::vector<double> out(batch * len);
  std::vector<double> tmp(full);
  for (std::size_t b = 0; b < batch; ++b) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    overlap_add(bins.re.vec(), bins.im.vec(), b, frames, tmp.data());
    std::copy(tmp.begin() + begin, tmp.begin() + end, out.begin() + b * len);
  }
  return record_op(
      Shape(batch, 1, 1, len), std::move(out), {&bins.re, &bins.im},
      [batch, frames, len, begin](std::span<const double> g,
                                  std::span<std::span<double>> gin) {
        // d frame[n] / d X_k = (c_k / 2) rfft(g_frame)_k, c_k = 1 at DC and
        // Nyquist, 2 elsewhere (with the 2/N spectrum scale undone).
        std::vector<double> gf(kFftSize);
        std::vector<std::complex<double>> spec(kBins);
        RealFft& fft = frame_fft();
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t base = b * kBins * frames;
          for (std::size_t t = 0; t < frames; ++t) {
            bool any = false;
            for (std::size_t n = 0; n < kFftSize; ++n) {
              const std::size_t pos = t * kHop + n;
              gf[n] = (pos >= begin && pos < begin + len)
                          ? g[b * len + pos - begin]
                          : 0.0;
              any = any || gf[n] != 0.0;
            }
            if (!any) continue;
            fft.forward(gf.data(), spec.data());
            for (std::size_t k = 0; k < kBins; ++k) {
              const double c = (k == 0 || k == kBins - 1) ? 0.5 : 1.0;
              if (!gin[0].empty()) gin[0][base + k * frames + t] += c * spec[k].real();
              if (!gin[1].empty()) gin[1][base + k * frames + t] += c * spec[k].imag();
            }
          }
        }
      });
}

AudioClip interior(const AudioClip& clip, std::size_t frames) {
  const std::size_t end = interior_end(frames);
  if (clip.samples.size() < end) throw ShapeError("clip shorter than interior");
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + interior_begin(),
                     clip.samples.begin() + end);
  return out;
}

NormalizedSpec normalize(const ComplexTensor& y) {
  const auto& re = y.re.vec();
  const auto& im = y.im.vec();
  const std::size_t n = re.size();
  std::vector<double> mag(n), pr(n), pi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::hypot(re[i], im[i]);
    const double x = 20.0 * std::log10(m + kMagEps);
    mag[i] = std::clamp((x - kFloorDb) / -kFloorDb, 0.0, 1.0);
    pr[i] = m > 0 ? re[i] / m : 0.0;
    pi[i] = m > 0 ? im[i] / m : 0.0;
  }
  return {Tensor(y.shape(), std::move(mag)),
          {Tensor(y.shape(), std::move(pr)), Tensor(y.shape(), std::move(pi))}};
}

ComplexTensor denormalize(const NormalizedSpec& n) {
  const auto& m01 = n.mag01.vec();
  std::vector<double> mag(m01.size());
  for (std::size_t i = 0; i < m01.size(); ++i) {
    const double db = -kFloorDb * m01[i] + kFloorDb;
    mag[i] = std::max(0.0, std::pow(10.0, db / 20.0) - kMagEps);
  }
  const Tensor m(n.mag01.shape(), std::move(mag));
  return {mul(n.phase.re, m), mul(n.phase.im, m)};
}

ComplexTensor denormalize_correction(const ComplexTensor& s) {
  const double floor = std::pow(10.0, kFloorDb / 20.0);
  const double a = -kFloorDb / 20.0 * std::log(10.0);
  // Gain u(m)/m with u(m) = floor * expm1(a m); series near the origin.
  const Tensor gain = radial(
      s,
      [=](double m) {
        return m < 1e-6 ? floor * a * (1.0 + 0.5 * a * m)
                        : floor * std::expm1(a * m) / m;
      },
      [=](double m) {
        return m < 1e-6 ? floor * a * a * 0.5
                        : floor * (a * m * std::exp(a * m) - std::expm1(a * m)) /
                              (m * m);
      });
  return cmul(s, gain);
}

ComplexTensor model_input(const ComplexTensor& y, InputMode mode) {
  if (mode == InputMode::kRawComplex) return {y.re.detach(), y.im.detach()};
  const NormalizedSpec n = normalize(y);
  return {mul(n.phase.re, n.mag01), mul(n.phase.im, n.mag01)};
}

double power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

MixResult mix_at_snr(const AudioClip& speech, const AudioClip& noise,
                     double snr_db) {
  if (speech.samples.size() != noise.samples.size()) {
    throw ShapeError("speech and noise lengths differ (" +
                     std::to_string(speech.samples.size()) + " vs " +
                     std::to_string(noise.samples.size()) + ")");
  }
  if (!std::isfinite(snr_db)) throw NumericError("SNR must be finite");
  const double ps = power(speech.samples);
  const double pv = power(noise.samples);
  if (!(pv > 0.0)) throw NumericError("noise is silent");
  MixResult r;
  r.gain = std::sqrt(ps / (pv * std::pow(10.0, snr_db / 10.0)));
  r.scaled_noise.sample_rate = noise.sample_rate;
  r.mixture.sample_rate = speech.sample_rate;
  r.scaled_noise.samples.resize(noise.samples.size());
  r.mixture.samples.resize(noise.samples.size());
  for (std::size_t i = 0; i < noise.samples.size(); ++i) {
    r.scaled_noise.samples[i] = r.gain * noise.samples[i];
    r.mixture.samples[i] = speech.samples[i] + r.scaled_noise.samples[i];
  }
  return r;
}

AudioClip apply_fade(const AudioClip& clip, double dur_s) {
  if (!(dur_s > 0.0)) throw ConfigError("fade duration must be positive");
  const std::size_t n =
      static_cast<std::size_t>(std::lround(dur_s * clip.sample_rate));
  if (2 * n >= clip.samples.size()) {
    throw ConfigError("clip of " + std::to_string(clip.samples.size()) +
                      " samples is too short for two " + std::to_string(n) +
                      "-sample fades");
  }
  AudioClip out = clip;
  const std::size_t len = out.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) /
                                          static_cast<double>(n));
    out.samples[i] *= w;
    out.samples[len - 1 - i] *= w;
  }
  return out;
}

}  // namespace hse
