#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hse/model_spec.h"

namespace hse {

struct DesignOptions {
  double tol = 0.02;
  // Starting widths for the search; defaults to the real model's widths.
  std::optional<BranchSpec> real_seed;
  std::optional<BranchSpec> complex_seed;
  // Geometry of the derived model; defaults to the real model's geometry.
  std::optional<Geometry> geometry;
  std::string name;
};

// Budget row: achieved vs target size of one branch part, real-equivalent.
struct BudgetCheck {
  std::string label;  // e.g. "real encoder"
  std::size_t target2x = 0;  // twice the target, so halves stay integral
  std::size_t achieved = 0;

  double target() const { return target2x / 2.0; }
  double deviation() const;  // relative, signed
};

struct DesignResult {
  ModelSpec spec;
  std::vector<BudgetCheck> checks;
};

// N_f and N_g of a real spec: its explicit budget when given, otherwise its
// own encoder and decoder sizes.
std::size_t encoder_budget(const ModelSpec& real_spec);
std::size_t decoder_budget(const ModelSpec& real_spec);

// Real and complex branches at N_f/2 and N_g/2 real-equivalent parameters
// each. Throws BudgetError with the closest sizes when a target cannot be met
// within tol.
DesignResult hybridize(const ModelSpec& real_spec, const DesignOptions& opt);

// Complex counterpart with the real model's encoder and decoder budgets in
// real-equivalent units.
DesignResult derive_complex(const ModelSpec& real_spec,
                            const DesignOptions& opt);

std::string render_checks(const std::vector<BudgetCheck>& checks);

}  // namespace hse
