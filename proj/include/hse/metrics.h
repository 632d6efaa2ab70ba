#pragma once

#include <string>
#include <vector>

#include "hse/dsp.h"
#include "hse/tensor.h"

namespace hse {

inline constexpr double kSdrCap = 100.0;

// 10 log10(|s_t|^2 / |e|^2) with s_t the projection of the estimate onto the
// reference; capped to [-100, 100] dB.
double si_sdr(const std::vector<double>& estimate,
              const std::vector<double>& reference);
double si_sdr(const AudioClip& estimate, const AudioClip& reference);

// Mean negative SI-SDR over the batch of (B, 1, 1, L) estimates against
// constant references of the same shape. Items beyond the cap contribute a
// constant.
Tensor si_sdr_loss(const Tensor& estimate, const Tensor& reference);

// 10 log10(P_s / P_v).
double measure_snr(const AudioClip& signal, const AudioClip& noise);

// Short-time objective intelligibility, original (non-extended) form.
double stoi(const AudioClip& estimate, const AudioClip& reference);

struct ClipMetrics {
  std::string id;
  double snr_db = 0.0;
  double si_sdr = 0.0;
  double stoi = 0.0;
};

struct BucketSummary {
  double snr_db = 0.0;
  std::size_t clips = 0;
  std::size_t nan_excluded = 0;
  double si_sdr = 0.0;
  double stoi = 0.0;
};

// Arithmetic means per SNR bucket; non-finite clips are excluded and counted.
std::vector<BucketSummary> summarize(const std::vector<ClipMetrics>& clips,
                                     const std::vector<double>& buckets);

// Rows of (label, per-bucket summaries) in the layout of an SNR-bucketed
// results table.
struct TableRow {
  std::string label;
  std::vector<BucketSummary> buckets;
};

std::string render_metric_table(const std::vector<TableRow>& rows);
// Columns: row, clip id, snr bucket, si_sdr, stoi.
std::string render_metric_csv(const std::vector<std::pair<std::string, ClipMetrics>>& clips);

}  // namespace hse
