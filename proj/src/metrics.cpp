#include "hse/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hse/error.h"
#include "hse/ops.h"

namespace hse {

double si_sdr(const std::vector<double>& x, const std::vector<double>& s) {
  if (x.size() != s.size()) {
    throw ShapeError("si_sdr: estimate has " + std::to_string(x.size()) +
                     " samples, reference " + std::to_string(s.size()));
  }
  double ss = 0.0, xs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ss += s[i] * s[i];
    xs += x[i] * s[i];
  }
  if (!(ss > 0.0)) throw NumericError("si_sdr: reference is all zeros");
  const double a = xs / ss;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = a * s[i];
    const double e = x[i] - t;
    num += t * t;
    den += e * e;
  }
  if (num == 0.0) return -kSdrCap;
  if (den == 0.0) return kSdrCap;
  return std::clamp(10.0 * std::log10(num / den), -kSdrCap, kSdrCap);
}

double si_sdr(const AudioClip& estimate, const AudioClip& reference) {
  return si_sdr(estimate.samples, reference.samples);
}

Tensor si_sdr_loss(const Tensor& estimate, const Tensor& reference) {
  const Shape& sh = estimate.shape();
  if (sh != reference.shape() || sh[kChannel] != 1 || sh[kFreq] != 1) {
    throw ShapeError("si_sdr_loss expects matching (B, 1, 1, L) tensors, got " +
                     sh.str() + " and " + reference.shape().str());
  }
  const std::size_t batch = sh[kBatch];
  const std::size_t len = sh[kTime];
  const double cap_ratio = std::pow(10.0, kSdrCap / 10.0);
  std::vector<Tensor> terms;
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor x = batch == 1 ? estimate : slice(estimate, kBatch, b, b + 1);
    const Tensor s = (batch == 1 ? reference : slice(reference, kBatch, b, b + 1)).detach();
    double ss = 0.0;
    for (double v : s.vec()) ss += v * v;
    if (!(ss > 0.0)) throw NumericError("si_sdr_loss: reference is all zeros");
    const Tensor a = scale(dot(x, s), 1.0 / ss);
    const Tensor target = mul(s, broadcast_to(reshape(a, Shape()), Shape(1, 1, 1, len)));
    const Tensor e = x - target;
    const Tensor num = sum(square(target));
    const Tensor den = sum(square(e));
    if (den.item() * cap_ratio <= num.item()) {
      terms.push_back(Tensor::scalar(-kSdrCap));
    } else if (num.item() * cap_ratio <= den.item()) {
      terms.push_back(Tensor::scalar(kSdrCap));
    } else {
      terms.push_back(scale(log10(div(num, den)), -10.0));
    }
  }
  Tensor total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return scale(total, 1.0 / static_cast<double>(batch));
}

double measure_snr(const AudioClip& signal, const AudioClip& noise) {
  const double pv = power(noise.samples);
  if (!(pv > 0.0)) throw NumericError("measure_snr: noise is silent");
  return 10.0 * std::log10(power(signal.samples) / pv);
}

std::vector<BucketSummary> summarize(const std::vector<ClipMetrics>& clips,
                                     const std::vector<double>& buckets) {
  std::vector<BucketSummary> out;
  for (double b : buckets) {
    BucketSummary s;
    s.snr_db = b;
    for (const ClipMetrics& c : clips) {
      if (c.snr_db != b) continue;
      if (!std::isfinite(c.si_sdr) || !std::isfinite(c.stoi)) {
        ++s.nan_excluded;
        continue;
      }
      ++s.clips;
      s.si_sdr += c.si_sdr;
      s.stoi += c.stoi;
    }
    if (s.clips) {
      s.si_sdr /= static_cast<double>(s.clips);
      s.stoi /= static_cast<double>(s.clips);
    } else {
      s.si_sdr = s.stoi = std::nan("");
    }
    out.push_back(s);
  }
  return out;
}

std::string render_metric_table(const std::vector<TableRow>& rows) {
  if (rows.empty()) return "";
  std::ostringstream os;
  char buf[64];
  os << "metric  row     ";
  for (const BucketSummary& b : rows[0].buckets) {
    std::snprintf(buf, sizeof buf, "%9s", (std::to_string(static_cast<int>(b.snr_db)) + " dB").c_str());
    os << buf;
  }
  os << '\n';
  for (const char* metric : {"STOI", "SI-SDR"}) {
    for (const TableRow& r : rows) {
      std::snprintf(buf, sizeof buf, "%-7s %-7s ", metric, r.label.c_str());
      os << buf;
      for (const BucketSummary& b : r.buckets) {
        const double v = metric[0] == 'S' && metric[1] == 'T' ? b.stoi : b.si_sdr;
        std::snprintf(buf, sizeof buf, metric[1] == 'T' ? "%9.3f" : "%9.2f", v);
        os << buf;
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string render_metric_csv(
    const std::vector<std::pair<std::string, ClipMetrics>>& clips) {
  std::ostringstream os;
  os << "row,clip_id,snr_bucket,si_sdr,stoi\n";
  char buf[160];
  for (const auto& [row, c] : clips) {
    std::snprintf(buf, sizeof buf, "%s,%s,%g,%.6f,%.6f\n", row.c_str(),
                  c.id.c_str(), c.snr_db, c.si_sdr, c.stoi);
    os << buf;
  }
  return os.str();
}

}  // namespace hse
