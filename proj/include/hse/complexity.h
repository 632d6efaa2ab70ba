#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hse/mac_counter.h"
#include "hse/model_spec.h"

namespace hse {

struct ComplexityRow {
  std::string name;
  std::string domain;  // "real" or "complex"
  std::size_t params = 0;
  std::uint64_t macs = 0;
};

struct ComplexityReport {
  std::string model;
  std::vector<ComplexityRow> rows;
  std::size_t params = 0;
  std::uint64_t macs_real = 0;
  std::uint64_t macs_complex = 0;
  std::size_t frames = 0;

  std::uint64_t macs_total() const { return macs_real + macs_complex; }
};

inline constexpr std::size_t kDefaultFrames = 1250;

// Analytic parameter totals, real-equivalent.
ComplexityReport count_params(const ModelSpec& spec);
// Scalars actually allocated by a built model.
std::size_t stored_param_scalars(const ModelSpec& spec);

// Analytic MACs over `frames` frames. Activation rows carry the
// per-element costs.
ComplexityReport count_macs(const ModelSpec& spec, std::size_t frames,
                            const MacCosts& costs = MacCosts{});
// Counted by running a forward pass on a zero input of `frames` frames.
MacCounter instrumented_macs(const ModelSpec& spec, std::size_t frames,
                             const MacCosts& costs = MacCosts{});

std::string render_report(const ComplexityReport& r);
std::string render_report_csv(const ComplexityReport& r);

struct CompareRow {
  std::string model;
  std::size_t params = 0;
  std::uint64_t macs_real = 0;
  std::uint64_t macs_complex = 0;
  std::uint64_t macs_total = 0;
  bool lowest = false;
};

// Side by side: Param, MACs[R], MACs[C], MACs. Needs at least two reports.
std::vector<CompareRow> compare(const std::vector<ComplexityReport>& reports);
std::string render_compare(const std::vector<CompareRow>& rows);

}  // namespace hse
