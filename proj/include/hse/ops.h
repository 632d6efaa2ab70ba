#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hse/tensor.h"

namespace hse {

// Elementwise binary ops broadcast extent-1 axes of either operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, double c);
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);

Tensor sqrt(const Tensor& a);
// Throws NumericError on any non-positive operand.
Tensor log10(const Tensor& a);
// Subgradient 0 at the origin.
Tensor abs(const Tensor& a);
// Gradient passes only strictly inside (lo, hi).
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor exp(const Tensor& a);
Tensor square(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Sum / mean of all elements as a scalar tensor.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Inner product of two equally shaped tensors.
Tensor dot(const Tensor& a, const Tensor& b);

// Matrices live on the (frequency, time) axes: a (1,1,m,k) x (1,1,k,n).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& a, Shape shape);
Tensor broadcast_to(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, Axis axis);
Tensor slice(const Tensor& a, Axis axis, std::size_t begin, std::size_t end);

// Frequency-only convolution. Weight (out, in, kernel, 1); bias (1, out, 1, 1).
// Output frequency extent floor((F + 2 pad - kernel) / stride) + 1.
Tensor conv_f(const Tensor& x, const Tensor& weight,
              const std::optional<Tensor>& bias, std::size_t stride,
              std::size_t pad);
// Transposed counterpart. Weight (in, out, kernel, 1). Output extent
// (F - 1) stride - 2 pad + kernel + output_pad.
Tensor conv_transpose_f(const Tensor& x, const Tensor& weight,
                        const std::optional<Tensor>& bias, std::size_t stride,
                        std::size_t pad, std::size_t output_pad);

std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                               std::size_t stride, std::size_t pad);
std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel,
                                         std::size_t stride, std::size_t pad,
                                         std::size_t output_pad);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double c);
Tensor operator*(double c, const Tensor& a);
Tensor operator+(const Tensor& a, double c);
Tensor operator-(const Tensor& a);

// ---- complex helpers (pairs of real tensors) ----

ComplexTensor cadd(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor csub(const ComplexTensor& a, const ComplexTensor& b);
// Hadamard product of complex tensors.
ComplexTensor cmul(const ComplexTensor& a, const ComplexTensor& b);
// Complex tensor times a real tensor (broadcast).
ComplexTensor cmul(const ComplexTensor& a, const Tensor& r);
ComplexTensor cscale(const ComplexTensor& a, double c);
ComplexTensor creshape(const ComplexTensor& a, Shape shape);
ComplexTensor cconcat(const std::vector<ComplexTensor>& parts, Axis axis);
ComplexTensor cslice(const ComplexTensor& a, Axis axis, std::size_t begin,
                     std::size_t end);

// s = f(|Z|) elementwise with ds/dre = f'(|Z|) re/|Z| (0 at the origin).
Tensor radial(const ComplexTensor& z, const std::function<double(double)>& f,
              const std::function<double(double)>& df);
// |Z| = sqrt(re^2 + im^2); gradient 0 at the origin.
Tensor magnitude(const ComplexTensor& z);

}  // namespace hse
