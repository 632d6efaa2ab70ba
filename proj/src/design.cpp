#include "hse/design.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "hse/error.h"

namespace hse {

double BudgetCheck::deviation() const {
  return (static_cast<double>(achieved) - target()) / target();
}

std::size_t encoder_budget(const ModelSpec& s) {
  return s.budget.encoder ? s.budget.encoder
                          : part_params(s, BranchId::kReal, Part::kEncoder);
}

std::size_t decoder_budget(const ModelSpec& s) {
  return s.budget.decoder ? s.budget.decoder
                          : part_params(s, BranchId::kReal, Part::kDecoder);
}

namespace {

using Widths = std::vector<std::size_t>;
using Eval = std::function<std::size_t(const Widths&)>;

constexpr std::size_t kInvalid = static_cast<std::size_t>(-1);

// Distance to the target in units of 2x params.
double gap(std::size_t achieved, std::size_t target2x) {
  if (achieved == kInvalid) return 1e300;
  return std::abs(2.0 * static_cast<double>(achieved) -
                  static_cast<double>(target2x));
}

bool within(std::size_t achieved, std::size_t target2x, double tol) {
  return gap(achieved, target2x) <= tol * static_cast<double>(target2x);
}

std::size_t round_even(double x) {
  const double r = 2.0 * std::round(x / 2.0);
  return static_cast<std::size_t>(std::max(2.0, r));
}

Widths scaled(const Widths& seed, double alpha) {
  Widths w(seed.size());
  for (std::size_t i = 0; i < seed.size(); ++i) {
    w[i] = round_even(alpha * static_cast<double>(seed[i]));
  }
  return w;
}

struct Searched {
  Widths widths;
  std::size_t achieved = kInvalid;
};

// Seed widths if already compliant; otherwise a common rescale followed by
// greedy +-2 moves, largest layer first.
Searched search_widths(const Widths& seed, std::size_t target2x, double tol,
                       const Eval& eval) {
  auto safe_eval = [&](const Widths& w) {
    try {
      return eval(w);
    } catch (const ConfigError&) {
      return kInvalid;
    }
  };
  Searched best{seed, safe_eval(seed)};
  if (within(best.achieved, target2x, tol) || seed.empty()) return best;

  // Common factor: bisection on the (monotone) size of the rescaled widths.
  double lo = 0.02, hi = 50.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = std::sqrt(lo * hi);
    const Widths w = scaled(seed, mid);
    const std::size_t a = safe_eval(w);
    if (gap(a, target2x) < gap(best.achieved, target2x)) best = {w, a};
    if (a != kInvalid && 2.0 * static_cast<double>(a) < target2x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  for (int it = 0; it < 4096; ++it) {
    if (within(best.achieved, target2x, tol)) break;
    std::vector<std::size_t> order(best.widths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return best.widths[a] > best.widths[b];
    });
    Searched step = best;
    for (std::size_t i : order) {
      for (int delta : {-2, 2}) {
        if (delta < 0 && best.widths[i] <= 2) continue;
        Widths w = best.widths;
        w[i] = static_cast<std::size_t>(static_cast<long>(w[i]) + delta);
        const std::size_t a = safe_eval(w);
        if (gap(a, target2x) < gap(step.achieved, target2x)) step = {w, a};
      }
    }
    if (step.widths == best.widths) break;
    best = step;
  }

  // Joint moves when single-layer steps overshoot the tolerance band.
  const int reach = best.widths.size() <= 6 ? 2 : 1;
  for (int round = 0; round < 16 && !within(best.achieved, target2x, tol); ++round) {
    Searched step = best;
    Widths w = best.widths;
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
      if (i == w.size()) {
        const std::size_t a = safe_eval(w);
        if (gap(a, target2x) < gap(step.achieved, target2x)) step = {w, a};
        return;
      }
      for (int d = -reach; d <= reach; ++d) {
        const long v = static_cast<long>(best.widths[i]) + d;
        if (v < 1) continue;
        w[i] = static_cast<std::size_t>(v);
        visit(i + 1);
      }
      w[i] = best.widths[i];
    };
    visit(0);
    if (step.widths == best.widths) break;
    best = step;
  }
  return best;
}

Widths encoder_free(const BranchSpec& b) {
  Widths w = b.conv;
  w.insert(w.end(), b.gru.begin(), b.gru.end());
  return w;
}

void set_encoder(ModelSpec& s, BranchId id, const Widths& w) {
  BranchSpec& b = id == BranchId::kReal ? s.real : s.complex;
  const std::size_t n = b.conv.size();
  std::copy(w.begin(), w.begin() + n, b.conv.begin());
  std::copy(w.begin() + n, w.end(), b.gru.begin());
  if (s.family == Family::kCrn) {
    b.linear = b.conv.back() * bottleneck_bins(s, id);
  }
}

Widths decoder_free(const BranchSpec& b) {
  return Widths(b.deconv.begin(), b.deconv.end() - 1);
}

void set_decoder(ModelSpec& s, BranchId id, const Widths& w) {
  BranchSpec& b = id == BranchId::kReal ? s.real : s.complex;
  std::copy(w.begin(), w.end(), b.deconv.begin());
}

std::string branch_word(BranchId id) {
  return id == BranchId::kReal ? "real" : "complex";
}

// Fits one part of one branch in place and records the outcome.
void fit_part(ModelSpec& s, BranchId id, Part part, std::size_t target2x,
              double tol, std::vector<BudgetCheck>& checks) {
  BranchSpec& b = id == BranchId::kReal ? s.real : s.complex;
  const bool enc = part == Part::kEncoder;
  const Widths seed = enc ? encoder_free(b) : decoder_free(b);
  const Eval eval = [&](const Widths& w) {
    ModelSpec t = s;
    if (enc) {
      set_encoder(t, id, w);
    } else {
      set_decoder(t, id, w);
    }
    return part_params(t, id, part);
  };
  const Searched r = search_widths(seed, target2x, tol, eval);
  if (r.achieved != kInvalid) {
    if (enc) {
      set_encoder(s, id, r.widths);
    } else {
      set_decoder(s, id, r.widths);
    }
  }
  BudgetCheck c;
  c.label = branch_word(id) + (enc ? " encoder" : " decoder");
  c.target2x = target2x;
  c.achieved = r.achieved == kInvalid ? 0 : r.achieved;
  checks.push_back(c);
}

struct PartTarget {
  BranchId id;
  Part part;
  std::size_t target2x;
};

void set_free(ModelSpec& s, BranchId id, Part part, const Widths& w) {
  if (part == Part::kEncoder) {
    set_encoder(s, id, w);
  } else {
    set_decoder(s, id, w);
  }
}

// Decoder sizes depend on the encoder output widths, so parts fitted one at a
// time can leave a decoder with no reachable size. Enumerates the last encoder
// conv width of each branch near the sequential fit and refits every part
// around it, keeping the candidate with the smallest worst relative gap.
void joint_refine(ModelSpec& s, const std::vector<PartTarget>& parts, double tol) {
  std::vector<BranchId> branches;
  for (const PartTarget& p : parts) {
    if (std::find(branches.begin(), branches.end(), p.id) == branches.end()) {
      branches.push_back(p.id);
    }
  }
  auto branch = [](ModelSpec& t, BranchId id) -> BranchSpec& {
    return id == BranchId::kReal ? t.real : t.complex;
  };
  std::vector<std::vector<std::size_t>> choices;
  for (BranchId id : branches) {
    const long e0 = static_cast<long>(branch(s, id).conv.back());
    const long r = std::max<long>(16, e0);
    std::vector<std::size_t> c;
    for (long d = 0; d <= r; ++d) {
      c.push_back(static_cast<std::size_t>(e0 + d));
      if (d > 0 && e0 - d >= 1) c.push_back(static_cast<std::size_t>(e0 - d));
    }
    choices.push_back(c);
  }

  auto fit = [&](const std::vector<std::size_t>& last, double& worst) {
    ModelSpec t = s;
    for (std::size_t b = 0; b < branches.size(); ++b) {
      BranchSpec& bs = branch(t, branches[b]);
      bs.conv.back() = last[b];
      set_encoder(t, branches[b], encoder_free(bs));
    }
    worst = 0.0;
    for (const PartTarget& p : parts) {
      BranchSpec& bs = branch(t, p.id);
      const bool enc = p.part == Part::kEncoder;
      Widths seed = enc ? encoder_free(bs) : decoder_free(bs);
      const std::size_t fixed = bs.conv.size() - 1;
      if (enc) seed.erase(seed.begin() + static_cast<long>(fixed));
      const Eval eval = [&](const Widths& w) {
        ModelSpec u = t;
        Widths full = w;
        if (enc) full.insert(full.begin() + static_cast<long>(fixed), branch(u, p.id).conv.back());
        set_free(u, p.id, p.part, full);
        return part_params(u, p.id, p.part);
      };
      const Searched r = search_widths(seed, p.target2x, tol, eval);
      if (r.achieved == kInvalid) {
        worst = 1e300;
        return t;
      }
      Widths full = r.widths;
      if (enc) full.insert(full.begin() + static_cast<long>(fixed), bs.conv.back());
      set_free(t, p.id, p.part, full);
      worst = std::max(worst, gap(r.achieved, p.target2x) / static_cast<double>(p.target2x));
    }
    try {
      validate(t);
    } catch (const ConfigError&) {
      worst = 1e300;
    }
    return t;
  };

  ModelSpec best = s;
  double best_worst = 1e300;
  std::vector<std::size_t> idx(branches.size(), 0), last(branches.size());
  while (true) {
    for (std::size_t b = 0; b < branches.size(); ++b) last[b] = choices[b][idx[b]];
    double worst = 0.0;
    ModelSpec t = fit(last, worst);
    if (worst < best_worst) {
      best_worst = worst;
      best = t;
      if (worst <= tol) break;
    }
    std::size_t b = 0;
    while (b < idx.size() && ++idx[b] == choices[b].size()) idx[b++] = 0;
    if (b == idx.size()) break;
  }
  s = best;
}

void recheck(const ModelSpec& s, const std::vector<PartTarget>& parts,
             std::vector<BudgetCheck>& checks) {
  for (std::size_t i = 0; i < parts.size(); ++i) {
    checks[i].achieved = part_params(s, parts[i].id, parts[i].part);
  }
}

bool acceptable(const ModelSpec& s, const std::vector<BudgetCheck>& checks, double tol) {
  for (const BudgetCheck& c : checks) {
    if (c.achieved == 0 || !within(c.achieved, c.target2x, tol)) return false;
  }
  try {
    validate(s);
  } catch (const ConfigError&) {
    return false;
  }
  return true;
}

void require_real(const ModelSpec& s) {
  if (s.domain != Domain::kReal) {
    throw ConfigError(std::string("expected a real-domain model, got ") +
                      domain_name(s.domain));
  }
  validate(s);
}

void finish(DesignResult& r, double tol) {
  bool ok = true;
  for (const BudgetCheck& c : r.checks) {
    ok = ok && c.achieved != 0 && within(c.achieved, c.target2x, tol);
  }
  if (!ok) {
    throw BudgetError("budget unreachable within tol " + std::to_string(tol) +
                      "; closest sizes:\n" + render_checks(r.checks));
  }
  validate(r.spec);
}

ModelSpec derived_base(const ModelSpec& real_spec, Domain d,
                       const DesignOptions& opt, const std::string& fallback) {
  ModelSpec s;
  s.name = opt.name.empty() ? fallback : opt.name;
  s.family = real_spec.family;
  s.domain = d;
  s.bins = real_spec.bins;
  s.geometry = opt.geometry ? *opt.geometry : real_spec.geometry;
  s.conversions = canonical_conversions(d);
  s.crelu_variant = real_spec.crelu_variant;
  s.input_mode = real_spec.input_mode;
  return s;
}

std::string derived_name(const ModelSpec& real_spec, char prefix) {
  std::string n = real_spec.name;
  if (!n.empty() && n[0] == 'r') n[0] = prefix;
  else n = std::string(1, prefix) + n;
  return n;
}

void check_seed(const BranchSpec& seed, const ModelSpec& real_spec) {
  if (seed.conv.size() != real_spec.real.conv.size() ||
      seed.deconv.size() != real_spec.real.deconv.size() ||
      seed.gru.size() != real_spec.real.gru.size()) {
    throw ConfigError("seed widths must have the real model's layer counts");
  }
}

}  // namespace

DesignResult hybridize(const ModelSpec& real_spec, const DesignOptions& opt) {
  require_real(real_spec);
  if (opt.tol < 0) throw ConfigError("tolerance must be non-negative");
  DesignResult r;
  r.spec = derived_base(real_spec, Domain::kHybrid, opt,
                        derived_name(real_spec, 'h'));
  r.spec.real = opt.real_seed ? *opt.real_seed : real_spec.real;
  r.spec.complex = opt.complex_seed ? *opt.complex_seed : real_spec.real;
  check_seed(r.spec.real, real_spec);
  check_seed(r.spec.complex, real_spec);
  for (BranchId id : {BranchId::kReal, BranchId::kComplex}) {
    set_encoder(r.spec, id, encoder_free(id == BranchId::kReal ? r.spec.real
                                                               : r.spec.complex));
  }
  // Targets N_f/2 and N_g/2, held as 2x values.
  const std::size_t nf = encoder_budget(real_spec);
  const std::size_t ng = decoder_budget(real_spec);
  const std::vector<PartTarget> parts = {{BranchId::kReal, Part::kEncoder, nf},
                                         {BranchId::kComplex, Part::kEncoder, nf},
                                         {BranchId::kReal, Part::kDecoder, ng},
                                         {BranchId::kComplex, Part::kDecoder, ng}};
  for (const PartTarget& p : parts) fit_part(r.spec, p.id, p.part, p.target2x, opt.tol, r.checks);
  if (!acceptable(r.spec, r.checks, opt.tol)) {
    joint_refine(r.spec, parts, opt.tol);
    recheck(r.spec, parts, r.checks);
  }
  finish(r, opt.tol);
  return r;
}

DesignResult derive_complex(const ModelSpec& real_spec,
                            const DesignOptions& opt) {
  require_real(real_spec);
  if (opt.tol < 0) throw ConfigError("tolerance must be non-negative");
  DesignResult r;
  r.spec = derived_base(real_spec, Domain::kComplex, opt,
                        derived_name(real_spec, 'c'));
  r.spec.complex = opt.complex_seed ? *opt.complex_seed : real_spec.real;
  check_seed(r.spec.complex, real_spec);
  set_encoder(r.spec, BranchId::kComplex, encoder_free(r.spec.complex));
  const std::size_t nf = encoder_budget(real_spec);
  const std::size_t ng = decoder_budget(real_spec);
  const std::vector<PartTarget> parts = {{BranchId::kComplex, Part::kEncoder, 2 * nf},
                                         {BranchId::kComplex, Part::kDecoder, 2 * ng}};
  for (const PartTarget& p : parts) fit_part(r.spec, p.id, p.part, p.target2x, opt.tol, r.checks);
  if (!acceptable(r.spec, r.checks, opt.tol)) {
    joint_refine(r.spec, parts, opt.tol);
    recheck(r.spec, parts, r.checks);
  }
  finish(r, opt.tol);
  return r;
}

std::string render_checks(const std::vector<BudgetCheck>& checks) {
  std::ostringstream os;
  for (const BudgetCheck& c : checks) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-16s target %12.1f  achieved %10zu  (%+.2f%%)\n",
                  c.label.c_str(), c.target(), c.achieved,
                  c.achieved ? 100.0 * c.deviation() : -100.0);
    os << line;
  }
  return os.str();
}

}  // namespace hse
