#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hse/ops.h"
#include "hse/tensor.h"

namespace hse::testing {

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(s.numel());
  for (double& x : v) x = u(rng);
  return Tensor(s, std::move(v));
}

inline ComplexTensor random_complex(Shape s, std::mt19937_64& rng,
                                    double lo = -1.0, double hi = 1.0) {
  Tensor re = random_tensor(s, rng, lo, hi);
  Tensor im = random_tensor(s, rng, lo, hi);
  return {re, im};
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double rel_err(const Tensor& a, const Tensor& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double n = std::sqrt(std::max(na, nb));
  return n < 1e-300 ? 0.0 : std::sqrt(d) / n;
}

// Tape gradient of the scalar f(x) against central differences.
inline double grad_check(const std::function<Tensor(const Tensor&)>& f,
                         const Tensor& x, double eps = 1e-6) {
  Tape tape;
  const Tensor w = tape.watch(x);
  const Tensor y = f(w);
  const Gradients g = tape.backward(y);
  const Tensor analytic = g.contains(w) ? g.of(w) : Tensor::zeros(x.shape());
  const Tensor numeric = finite_difference_grad(
      [&](const Tensor& v) { return f(v).item(); }, x, eps);
  return rel_err(analytic, numeric);
}

// Projects onto fixed random weights so every output element matters.
inline Tensor project(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum(mul(y, random_tensor(y.shape(), rng)));
}

inline Tensor project(const ComplexTensor& z, std::uint64_t seed) {
  return add(project(z.re, seed), project(z.im, seed + 1));
}

}  // namespace hse::testing
