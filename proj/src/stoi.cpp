#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "hse/error.h"
#include "hse/fft.h"
#include "hse/metrics.h"

namespace hse {

namespace {

constexpr int kStoiRate = 10000;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kNfft = 512;
constexpr std::size_t kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;  // 384 ms
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// hanning(n + 2)[1:-1]
std::vector<double> inner_hanning(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
  }
  return w;
}

using Frames = std::vector<std::vector<double>>;

Frames frame(const std::vector<double>& x, std::size_t len, std::size_t hop,
             const std::vector<double>& w) {
  Frames f;
  for (std::size_t i = 0; i + len < x.size(); i += hop) {
    std::vector<double> fr(len);
    for (std::size_t n = 0; n < len; ++n) fr[n] = w[n] * x[i + n];
    f.push_back(std::move(fr));
  }
  return f;
}

std::vector<double> overlap_add(const Frames& f, std::size_t hop) {
  if (f.empty()) return {};
  const std::size_t len = f[0].size();
  std::vector<double> out((f.size() - 1) * hop + len, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t n = 0; n < len; ++n) out[i * hop + n] += f[i][n];
  }
  return out;
}

// Drops frames more than kDynRange dB below the reference's loudest frame.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const std::size_t hop = kFrame / 2;
  const auto w = inner_hanning(kFrame);
  const Frames xf = frame(x, kFrame, hop, w);
  const Frames yf = frame(y, kFrame, hop, w);
  std::vector<double> energy(xf.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xf.size(); ++i) {
    double s = 0.0;
    for (double v : xf[i]) s += v * v;
    energy[i] = 20.0 * std::log10(std::sqrt(s) + kEps);
    peak = std::max(peak, energy[i]);
  }
  Frames xk, yk;
  for (std::size_t i = 0; i < xf.size(); ++i) {
    if (peak - kDynRange - energy[i] < 0) {
      xk.push_back(xf[i]);
      yk.push_back(yf[i]);
    }
  }
  x = overlap_add(xk, hop);
  y = overlap_add(yk, hop);
}

// (bands x frames) one-third-octave band envelopes.
std::vector<std::vector<double>> third_octave(const std::vector<double>& x) {
  static const std::vector<std::vector<std::size_t>> bands = [] {
    const std::size_t nb = kNfft / 2 + 1;
    std::vector<double> f(nb);
    for (std::size_t i = 0; i < nb; ++i) {
      f[i] = static_cast<double>(kStoiRate) * i / kNfft;
    }
    auto nearest = [&](double target) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < nb; ++i) {
        if ((f[i] - target) * (f[i] - target) <
            (f[best] - target) * (f[best] - target)) {
          best = i;
        }
      }
      return best;
    };
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t k = 0; k < kBands; ++k) {
      const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
      const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
      std::vector<std::size_t> idx;
      for (std::size_t i = nearest(lo); i < nearest(hi); ++i) idx.push_back(i);
      out.push_back(idx);
    }
    return out;
  }();

  const auto w = inner_hanning(kFrame);
  const Frames fr = frame(x, kFrame, kFrame / 2, w);
  RealFft fft(kNfft);
  std::vector<double> buf(kNfft);
  std::vector<std::complex<double>> spec(kNfft / 2 + 1);
  std::vector<std::vector<double>> tob(kBands, std::vector<double>(fr.size()));
  for (std::size_t t = 0; t < fr.size(); ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(fr[t].begin(), fr[t].end(), buf.begin());
    fft.forward(buf.data(), spec.data());
    for (std::size_t b = 0; b < kBands; ++b) {
      double e = 0.0;
      for (std::size_t i : bands[b]) e += std::norm(spec[i]);
      tob[b][t] = std::sqrt(e);
    }
  }
  return tob;
}

}  // namespace

double stoi(const AudioClip& estimate, const AudioClip& reference) {
  if (estimate.samples.size() != reference.samples.size()) {
    throw ShapeError("stoi: estimate and reference lengths differ");
  }
  if (estimate.sample_rate != reference.sample_rate) {
    throw ShapeError("stoi: sample rates differ");
  }
  std::vector<double> x = resample(reference, kStoiRate).samples;
  std::vector<double> y = resample(estimate, kStoiRate).samples;
  remove_silent_frames(x, y);
  const auto xt = third_octave(x);
  const auto yt = third_octave(y);
  const std::size_t frames = xt[0].size();
  if (frames < kSegment) {
    throw ConfigError("stoi: not enough speech-active frames (" +
                      std::to_string(frames) + " < " +
                      std::to_string(kSegment) + ")");
  }
  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xs(kSegment), ys(kSegment);
  for (std::size_t m = kSegment; m <= frames; ++m) {
    for (std::size_t b = 0; b < kBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        xs[j] = xt[b][m - kSegment + j];
        ys[j] = yt[b][m - kSegment + j];
        nx += xs[j] * xs[j];
        ny += ys[j] * ys[j];
      }
      const double norm = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        ys[j] = std::min(ys[j] * norm, xs[j] * (1.0 + clip));
        mx += xs[j];
        my += ys[j];
      }
      mx /= kSegment;
      my /= kSegment;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        const double a = xs[j] - mx;
        const double c = ys[j] - my;
        sxx += a * a;
        syy += c * c;
        sxy += a * c;
      }
      total += sxy / ((std::sqrt(sxx) + kEps) * (std::sqrt(syy) + kEps));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace hse
