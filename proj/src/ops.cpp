#include "hse/ops.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hse/error.h"
#include "hse/mac_counter.h"

namespace hse {

// ---------------------------------------------------------------------------
// MAC counter plumbing

namespace {
thread_local MacCounter* t_counter = nullptr;
thread_local bool t_complex_bucket = false;
}  // namespace

ScopedMacCounter::ScopedMacCounter(MacCounter& counter)
    : previous_(t_counter) {
  t_counter = &counter;
}
ScopedMacCounter::~ScopedMacCounter() { t_counter = previous_; }

ScopedComplexBucket::ScopedComplexBucket() : previous_(t_complex_bucket) {
  t_complex_bucket = true;
}
ScopedComplexBucket::~ScopedComplexBucket() { t_complex_bucket = previous_; }

namespace macs {
bool active() { return t_counter != nullptr; }
void add(std::uint64_t n) {
  add(n, t_complex_bucket ? MacBucket::kComplex : MacBucket::kReal);
}
void add(std::uint64_t n, MacBucket bucket) {
  if (!t_counter) return;
  (bucket == MacBucket::kComplex ? t_counter->complex : t_counter->real) += n;
}
const MacCosts* costs() { return t_counter ? &t_counter->costs : nullptr; }
}  // namespace macs

namespace {

using Storage = std::shared_ptr<const std::vector<double>>;

Shape broadcast_shape(const Shape& a, const Shape& b) {
  Shape out;
  for (int ax = 0; ax < 4; ++ax) {
    if (a[ax] == b[ax] || b[ax] == 1) {
      out[ax] = a[ax];
    } else if (a[ax] == 1) {
      out[ax] = b[ax];
    } else {
      throw ShapeError("cannot broadcast " + a.str() + " with " + b.str());
    }
  }
  return out;
}

// Calls fn(out_index, a_index, b_index) for every element of `out`.
template <class Fn>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b,
                        Fn&& fn) {
  std::array<std::size_t, 4> sa{}, sb{};
  for (int ax = 0; ax < 4; ++ax) {
    sa[ax] = a[ax] == 1 ? 0 : a.stride(ax);
    sb[ax] = b[ax] == 1 ? 0 : b.stride(ax);
  }
  std::size_t o = 0;
  for (std::size_t i0 = 0; i0 < out[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < out[1]; ++i1) {
      for (std::size_t i2 = 0; i2 < out[2]; ++i2) {
        std::size_t ia = i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
        std::size_t ib = i0 * sb[0] + i1 * sb[1] + i2 * sb[2];
        for (std::size_t i3 = 0; i3 < out[3]; ++i3) {
          fn(o++, ia + i3 * sa[3], ib + i3 * sb[3]);
        }
      }
    }
  }
}

// f(a, b) -> value; da(a, b, y) and db(a, b, y) are the local partials.
template <class F, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  std::vector<double> out(out_shape.numel());
  const auto& av = a.vec();
  const auto& bv = b.vec();
  const bool same = a.shape() == b.shape();
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  } else {
    for_each_broadcast(out_shape, a.shape(), b.shape(),
                       [&](std::size_t o, std::size_t ia, std::size_t ib) {
                         out[o] = f(av[ia], bv[ib]);
                       });
  }
  if (!a.tracked() && !b.tracked()) return record_op(out_shape, std::move(out), {}, {});

  Storage as = a.storage(), bs = b.storage();
  Shape sa = a.shape(), sb = b.shape();
  auto ys = std::make_shared<std::vector<double>>(out);
  return record_op(
      out_shape, std::move(out), {&a, &b},
      [as, bs, sa, sb, out_shape, ys, da, db, same](
          std::span<const double> g, std::span<std::span<double>> gin) {
        const auto& x = *as;
        const auto& z = *bs;
        const auto& y = *ys;
        auto ga = gin[0];
        auto gb = gin[1];
        if (same) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (!ga.empty()) ga[i] += g[i] * da(x[i], z[i], y[i]);
            if (!gb.empty()) gb[i] += g[i] * db(x[i], z[i], y[i]);
          }
          return;
        }
        for_each_broadcast(out_shape, sa, sb,
                           [&](std::size_t o, std::size_t ia, std::size_t ib) {
                             if (!ga.empty())
                               ga[ia] += g[o] * da(x[ia], z[ib], y[o]);
                             if (!gb.empty())
                               gb[ib] += g[o] * db(x[ia], z[ib], y[o]);
                           });
      });
}

// f(x) -> y; df(x, y) -> dy/dx.
template <class F, class DF>
Tensor unary(const Tensor& a, F f, DF df) {
  const auto& av = a.vec();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  if (!a.tracked()) return record_op(a.shape(), std::move(out), {}, {});
  Storage as = a.storage();
  auto ys = std::make_shared<std::vector<double>>(out);
  return record_op(a.shape(), std::move(out), {&a},
                   [as, ys, df](std::span<const double> g,
                                std::span<std::span<double>> gin) {
                     const auto& x = *as;
                     const auto& y = *ys;
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       gin[0][i] += g[i] * df(x[i], y[i]);
                     }
                   });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double v : b.vec()) {
    if (v == 0.0) throw NumericError("division by zero");
  }
  return binary(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double q) { return -q / y; });
}

Tensor add(const Tensor& a, double c) {
  return unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& a, double c) {
  return unary(
      a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor sqrt(const Tensor& a) {
  for (double v : a.vec()) {
    if (v < 0.0) throw NumericError("sqrt of negative value");
  }
  return unary(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor log10(const Tensor& a) {
  for (double v : a.vec()) {
    if (!(v > 0.0)) throw NumericError("log10 of non-positive value");
  }
  return unary(
      a, [](double x) { return std::log10(x); },
      [](double x, double) { return 1.0 / (x * std::log(10.0)); });
}

Tensor abs(const Tensor& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw Error("clamp: lo > hi");
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, stable_sigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  const auto& v = a.vec();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  return record_op(Shape{}, {s}, {&a},
                   [](std::span<const double> g,
                      std::span<std::span<double>> gin) {
                     for (double& x : gin[0]) x += g[0];
                   });
}

Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("dot: " + a.shape().str() + " vs " + b.shape().str());
  }
  const auto& x = a.vec();
  const auto& y = b.vec();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  Storage xs = a.storage(), ys = b.storage();
  return record_op(Shape{}, {s}, {&a, &b},
                   [xs, ys](std::span<const double> g,
                            std::span<std::span<double>> gin) {
                     if (!gin[0].empty())
                       for (std::size_t i = 0; i < gin[0].size(); ++i)
                         gin[0][i] += g[0] * (*ys)[i];
                     if (!gin[1].empty())
                       for (std::size_t i = 0; i < gin[1].size(); ++i)
                         gin[1][i] += g[0] * (*xs)[i];
                   });
}

// ---------------------------------------------------------------------------
// Matrix product

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa[0] != 1 || sa[1] != 1 || sb[0] != 1 || sb[1] != 1) {
    throw ShapeError("matmul expects (1,1,m,k) x (1,1,k,n), got " + sa.str() +
                     " and " + sb.str());
  }
  const std::size_t m = sa[2], k = sa[3], n = sb[3];
  if (sb[2] != k) {
    throw ShapeError("matmul inner extents differ: " + sa.str() + " x " +
                     sb.str());
  }
  const auto& x = a.vec();
  const auto& y = b.vec();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += xv * y[p * n + j];
    }
  }
  macs::add(static_cast<std::uint64_t>(m * k * n));
  Storage xs = a.storage(), ys = b.storage();
  return record_op(
      Shape(1, 1, m, n), std::move(out), {&a, &b},
      [xs, ys, m, k, n](std::span<const double> g,
                        std::span<std::span<double>> gin) {
        const auto& x = *xs;
        const auto& y = *ys;
        if (!gin[0].empty()) {  // g . b^T
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * y[p * n + j];
              gin[0][i * k + p] += s;
            }
        }
        if (!gin[1].empty()) {  // a^T . g
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double xv = x[i * k + p];
              for (std::size_t j = 0; j < n; ++j)
                gin[1][p * n + j] += xv * g[i * n + j];
            }
        }
      });
}

// ---------------------------------------------------------------------------
// Structural

Tensor reshape(const Tensor& a, Shape shape) {
  return make_shared_view(a, shape);
}

Tensor broadcast_to(const Tensor& a, Shape shape) {
  if (broadcast_shape(shape, a.shape()) != shape) {
    throw ShapeError("cannot broadcast " + a.shape().str() + " to " +
                     shape.str());
  }
  std::vector<double> out(shape.numel());
  const auto& v = a.vec();
  for_each_broadcast(shape, shape, a.shape(),
                     [&](std::size_t o, std::size_t, std::size_t ia) {
                       out[o] = v[ia];
                     });
  Shape src = a.shape();
  return record_op(shape, std::move(out), {&a},
                   [shape, src](std::span<const double> g,
                                std::span<std::span<double>> gin) {
                     for_each_broadcast(
                         shape, shape, src,
                         [&](std::size_t o, std::size_t, std::size_t ia) {
                           gin[0][ia] += g[o];
                         });
                   });
}

Tensor concat(const std::vector<Tensor>& parts, Axis axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    for (int ax = 0; ax < 4; ++ax) {
      if (ax != axis && p.shape()[ax] != parts[0].shape()[ax]) {
        throw ShapeError("concat: " + p.shape().str() + " vs " +
                         parts[0].shape().str());
      }
    }
    out_shape[axis] += p.shape()[axis];
  }
  std::size_t outer = 1;
  for (int ax = 0; ax < axis; ++ax) outer *= out_shape[ax];
  const std::size_t inner = out_shape.stride(axis);
  const std::size_t out_block = out_shape[axis] * inner;

  std::vector<double> out(out_shape.numel());
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(off);
    const std::size_t block = p.shape()[axis] * inner;
    const auto& v = p.vec();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.begin() + o * block, block,
                  out.begin() + o * out_block + off);
    }
    off += block;
  }
  std::vector<const Tensor*> inputs;
  std::vector<std::size_t> blocks;
  for (const Tensor& p : parts) {
    inputs.push_back(&p);
    blocks.push_back(p.shape()[axis] * inner);
  }
  return record_op(out_shape, std::move(out), inputs,
                   [outer, out_block, offsets, blocks](
                       std::span<const double> g,
                       std::span<std::span<double>> gin) {
                     for (std::size_t k = 0; k < gin.size(); ++k) {
                       if (gin[k].empty()) continue;
                       for (std::size_t o = 0; o < outer; ++o) {
                         const double* src = g.data() + o * out_block + offsets[k];
                         double* dst = gin[k].data() + o * blocks[k];
                         for (std::size_t i = 0; i < blocks[k]; ++i) dst[i] += src[i];
                       }
                     }
                   });
}

Tensor slice(const Tensor& a, Axis axis, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  if (begin > end || end > s[axis]) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of range for " + s.str());
  }
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  std::size_t outer = 1;
  for (int ax = 0; ax < axis; ++ax) outer *= s[ax];
  const std::size_t inner = s.stride(axis);
  const std::size_t in_block = s[axis] * inner;
  const std::size_t out_block = out_shape[axis] * inner;
  const std::size_t start = begin * inner;
  std::vector<double> out(out_shape.numel());
  const auto& v = a.vec();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(v.begin() + o * in_block + start, out_block,
                out.begin() + o * out_block);
  }
  return record_op(out_shape, std::move(out), {&a},
                   [outer, in_block, out_block, start](
                       std::span<const double> g,
                       std::span<std::span<double>> gin) {
                     for (std::size_t o = 0; o < outer; ++o) {
                       double* dst = gin[0].data() + o * in_block + start;
                       const double* src = g.data() + o * out_block;
                       for (std::size_t i = 0; i < out_block; ++i) dst[i] += src[i];
                     }
                   });
}

// ---------------------------------------------------------------------------
// Frequency-only convolutions

std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                               std::size_t stride, std::size_t pad) {
  if (stride == 0 || kernel == 0) throw ShapeError("conv: zero stride/kernel");
  if (in + 2 * pad < kernel) {
    throw ShapeError("conv: frequency extent " + std::to_string(in) +
                     " smaller than kernel " + std::to_string(kernel) +
                     " after padding " + std::to_string(pad));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel,
                                         std::size_t stride, std::size_t pad,
                                         std::size_t output_pad) {
  if (stride == 0 || kernel == 0 || in == 0) {
    throw ShapeError("conv transpose: zero stride/kernel/extent");
  }
  const std::size_t full = (in - 1) * stride + kernel + output_pad;
  if (full <= 2 * pad) throw ShapeError("conv transpose: padding too large");
  return full - 2 * pad;
}

namespace {

struct ConvDims {
  std::size_t batch, in_ch, out_ch, kernel, f_in, f_out, time, stride, pad;
};

void check_bias(const std::optional<Tensor>& bias, std::size_t out_ch) {
  if (bias && bias->shape() != Shape(1, out_ch, 1, 1)) {
    throw ShapeError("bias must be (1, " + std::to_string(out_ch) +
                     ", 1, 1), got " + bias->shape().str());
  }
}

// Kernels walk time in tiles of kTile so each output row segment stays in
// registers while the (input channel, tap) pairs are summed into it.
constexpr std::size_t kTile = 32;

long tap_source(const ConvDims& d, std::size_t fo, std::size_t k) {
  return static_cast<long>(fo * d.stride + k) - static_cast<long>(d.pad);
}

// y[b,o,fo,:] += w[o,i,k] x[b,i,fo*s+k-p,:]   (forward conv)
// Shared by conv forward and conv-transpose input gradient.
void conv_accumulate(const ConvDims& d, const double* x, const double* w,
                     double* y) {
  const std::size_t T = d.time;
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t t0 = 0; t0 < T; t0 += kTile) {
      const std::size_t n = std::min(kTile, T - t0);
      for (std::size_t fo = 0; fo < d.f_out; ++fo)
        for (std::size_t o = 0; o < d.out_ch; ++o) {
          double* yr = y + ((b * d.out_ch + o) * d.f_out + fo) * T + t0;
          double acc[kTile] = {};
          for (std::size_t i = 0; i < d.in_ch; ++i)
            for (std::size_t k = 0; k < d.kernel; ++k) {
              const long fi = tap_source(d, fo, k);
              if (fi < 0 || fi >= static_cast<long>(d.f_in)) continue;
              const double wv = w[(o * d.in_ch + i) * d.kernel + k];
              const double* xr = x + ((b * d.in_ch + i) * d.f_in + fi) * T + t0;
              if (n == kTile) {
                for (std::size_t t = 0; t < kTile; ++t) acc[t] += wv * xr[t];
              } else {
                for (std::size_t t = 0; t < n; ++t) acc[t] += wv * xr[t];
              }
            }
          for (std::size_t t = 0; t < n; ++t) yr[t] += acc[t];
        }
    }
}

// x_grad[b,i,fo*s+k-p,:] += w[o,i,k] g[b,o,fo,:]   (adjoint of the above)
void conv_adjoint_accumulate(const ConvDims& d, const double* g,
                             const double* w, double* xg) {
  const std::size_t T = d.time;
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t t0 = 0; t0 < T; t0 += kTile) {
      const std::size_t n = std::min(kTile, T - t0);
      for (std::size_t fi = 0; fi < d.f_in; ++fi)
        for (std::size_t i = 0; i < d.in_ch; ++i) {
          double* xr = xg + ((b * d.in_ch + i) * d.f_in + fi) * T + t0;
          double acc[kTile] = {};
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const long num = static_cast<long>(fi + d.pad) - static_cast<long>(k);
            if (num < 0 || num % static_cast<long>(d.stride) != 0) continue;
            const std::size_t fo = static_cast<std::size_t>(num) / d.stride;
            if (fo >= d.f_out) continue;
            for (std::size_t o = 0; o < d.out_ch; ++o) {
              const double wv = w[(o * d.in_ch + i) * d.kernel + k];
              const double* gr = g + ((b * d.out_ch + o) * d.f_out + fo) * T + t0;
              if (n == kTile) {
                for (std::size_t t = 0; t < kTile; ++t) acc[t] += wv * gr[t];
              } else {
                for (std::size_t t = 0; t < n; ++t) acc[t] += wv * gr[t];
              }
            }
          }
          for (std::size_t t = 0; t < n; ++t) xr[t] += acc[t];
        }
    }
}

double tile_dot(const double* a, const double* b, std::size_t n) {
  constexpr std::size_t kLanes = 4;
  double lanes[kLanes] = {};
  const std::size_t body = n - n % kLanes;
  for (std::size_t t = 0; t < body; t += kLanes)
    for (std::size_t j = 0; j < kLanes; ++j) lanes[j] += a[t + j] * b[t + j];
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (std::size_t t = body; t < n; ++t) acc += a[t] * b[t];
  return acc;
}

// w_grad[o,i,k] += sum_{b,fo,t} g[b,o,fo,t] x[b,i,fo*s+k-p,t]
void conv_weight_grad(const ConvDims& d, const double* g, const double* x,
                      double* wg) {
  const std::size_t T = d.time;
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t t0 = 0; t0 < T; t0 += kTile) {
      const std::size_t n = std::min(kTile, T - t0);
      for (std::size_t fo = 0; fo < d.f_out; ++fo)
        for (std::size_t o = 0; o < d.out_ch; ++o) {
          const double* gr = g + ((b * d.out_ch + o) * d.f_out + fo) * T + t0;
          for (std::size_t i = 0; i < d.in_ch; ++i)
            for (std::size_t k = 0; k < d.kernel; ++k) {
              const long fi = tap_source(d, fo, k);
              if (fi < 0 || fi >= static_cast<long>(d.f_in)) continue;
              const double* xr = x + ((b * d.in_ch + i) * d.f_in + fi) * T + t0;
              wg[(o * d.in_ch + i) * d.kernel + k] += tile_dot(gr, xr, n);
            }
        }
    }
}

void add_bias(const double* bias, std::size_t batch, std::size_t ch,
              std::size_t plane, double* y) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < ch; ++c) {
      double* yr = y + (b * ch + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) yr[i] += bias[c];
    }
}

void bias_grad(const double* g, std::size_t batch, std::size_t ch,
               std::size_t plane, double* bg) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < ch; ++c) {
      const double* gr = g + (b * ch + c) * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += gr[i];
      bg[c] += acc;
    }
}

}  // namespace

Tensor conv_f(const Tensor& x, const Tensor& weight,
              const std::optional<Tensor>& bias, std::size_t stride,
              std::size_t pad) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[3] != 1) throw ShapeError("conv kernel must have time extent 1");
  if (ws[1] != xs[1]) {
    throw ShapeError("conv expects " + std::to_string(ws[1]) +
                     " input channels, got " + xs.str());
  }
  ConvDims d{xs[0], ws[1], ws[0], ws[2], xs[2], 0, xs[3], stride, pad};
  d.f_out = conv_output_extent(d.f_in, d.kernel, stride, pad);
  check_bias(bias, d.out_ch);

  const Shape out_shape(d.batch, d.out_ch, d.f_out, d.time);
  std::vector<double> out(out_shape.numel(), 0.0);
  conv_accumulate(d, x.vec().data(), weight.vec().data(), out.data());
  if (bias) add_bias(bias->vec().data(), d.batch, d.out_ch, d.f_out * d.time,
                     out.data());
  macs::add(static_cast<std::uint64_t>(d.batch * d.time * d.out_ch * d.in_ch *
                                       d.kernel * d.f_out));

  Storage xs_ = x.storage(), ws_ = weight.storage();
  const bool has_bias = bias.has_value();
  std::vector<const Tensor*> inputs{&x, &weight};
  if (has_bias) inputs.push_back(&*bias);
  return record_op(out_shape, std::move(out), inputs,
                   [d, xs_, ws_, has_bias](std::span<const double> g,
                                           std::span<std::span<double>> gin) {
                     if (!gin[0].empty())
                       conv_adjoint_accumulate(d, g.data(), ws_->data(),
                                               gin[0].data());
                     if (!gin[1].empty())
                       conv_weight_grad(d, g.data(), xs_->data(), gin[1].data());
                     if (has_bias && !gin[2].empty())
                       bias_grad(g.data(), d.batch, d.out_ch, d.f_out * d.time,
                                 gin[2].data());
                   });
}

Tensor conv_transpose_f(const Tensor& x, const Tensor& weight,
                        const std::optional<Tensor>& bias, std::size_t stride,
                        std::size_t pad, std::size_t output_pad) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[3] != 1) throw ShapeError("conv kernel must have time extent 1");
  if (ws[0] != xs[1]) {
    throw ShapeError("conv transpose expects " + std::to_string(ws[0]) +
                     " input channels, got " + xs.str());
  }
  if (output_pad >= stride) {
    throw ShapeError("output padding must be smaller than the stride");
  }
  const std::size_t f_out =
      conv_transpose_output_extent(xs[2], ws[2], stride, pad, output_pad);
  // The transposed conv is the adjoint of a forward conv from the output
  // geometry (out_ch = our in_ch) to the input geometry.
  ConvDims d{xs[0], ws[1], ws[0], ws[2], f_out, xs[2], xs[3], stride, pad};
  check_bias(bias, d.in_ch);

  const Shape out_shape(d.batch, d.in_ch, f_out, d.time);
  std::vector<double> out(out_shape.numel(), 0.0);
  conv_adjoint_accumulate(d, x.vec().data(), weight.vec().data(), out.data());
  if (bias) add_bias(bias->vec().data(), d.batch, d.in_ch, f_out * d.time,
                     out.data());
  macs::add(static_cast<std::uint64_t>(d.batch * d.time * d.out_ch * d.in_ch *
                                       d.kernel * d.f_out));

  Storage xs_ = x.storage(), ws_ = weight.storage();
  const bool has_bias = bias.has_value();
  std::vector<const Tensor*> inputs{&x, &weight};
  if (has_bias) inputs.push_back(&*bias);
  return record_op(out_shape, std::move(out), inputs,
                   [d, xs_, ws_, has_bias, f_out](
                       std::span<const double> g,
                       std::span<std::span<double>> gin) {
                     if (!gin[0].empty())
                       conv_accumulate(d, g.data(), ws_->data(), gin[0].data());
                     if (!gin[1].empty())
                       conv_weight_grad(d, xs_->data(), g.data(), gin[1].data());
                     if (has_bias && !gin[2].empty())
                       bias_grad(g.data(), d.batch, d.in_ch, f_out * d.time,
                                 gin[2].data());
                   });
}

// ---------------------------------------------------------------------------
// Operators

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
Tensor operator+(const Tensor& a, double c) { return add(a, c); }
Tensor operator-(const Tensor& a) { return neg(a); }

// ---------------------------------------------------------------------------
// Complex helpers

ComplexTensor cadd(const ComplexTensor& a, const ComplexTensor& b) {
  return {add(a.re, b.re), add(a.im, b.im)};
}

ComplexTensor csub(const ComplexTensor& a, const ComplexTensor& b) {
  return {sub(a.re, b.re), sub(a.im, b.im)};
}

ComplexTensor cmul(const ComplexTensor& a, const ComplexTensor& b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)),
          add(mul(a.re, b.im), mul(a.im, b.re))};
}

ComplexTensor cmul(const ComplexTensor& a, const Tensor& r) {
  return {mul(a.re, r), mul(a.im, r)};
}

ComplexTensor cscale(const ComplexTensor& a, double c) {
  return {scale(a.re, c), scale(a.im, c)};
}

ComplexTensor creshape(const ComplexTensor& a, Shape shape) {
  return {reshape(a.re, shape), reshape(a.im, shape)};
}

ComplexTensor cconcat(const std::vector<ComplexTensor>& parts, Axis axis) {
  std::vector<Tensor> re, im;
  for (const auto& p : parts) {
    re.push_back(p.re);
    im.push_back(p.im);
  }
  return {concat(re, axis), concat(im, axis)};
}

ComplexTensor cslice(const ComplexTensor& a, Axis axis, std::size_t begin,
                     std::size_t end) {
  return {slice(a.re, axis, begin, end), slice(a.im, axis, begin, end)};
}

Tensor radial(const ComplexTensor& z, const std::function<double(double)>& f,
              const std::function<double(double)>& df) {
  const auto& re = z.re.vec();
  const auto& im = z.im.vec();
  const std::size_t n = re.size();
  std::vector<double> out(n);
  auto mags = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    (*mags)[i] = std::hypot(re[i], im[i]);
    out[i] = f((*mags)[i]);
  }
  Storage rs = z.re.storage(), is = z.im.storage();
  return record_op(z.shape(), std::move(out), {&z.re, &z.im},
                   [rs, is, mags, df](std::span<const double> g,
                                      std::span<std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       const double m = (*mags)[i];
                       if (m == 0.0) continue;
                       const double c = g[i] * df(m) / m;
                       if (!gin[0].empty()) gin[0][i] += c * (*rs)[i];
                       if (!gin[1].empty()) gin[1][i] += c * (*is)[i];
                     }
                   });
}

Tensor magnitude(const ComplexTensor& z) {
  return radial(
      z, [](double m) { return m; }, [](double) { return 1.0; });
}

}  // namespace hse
