#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hse/tensor.h"

namespace hse {

enum class LayerKind { kLinear, kConv, kConvTranspose, kGru };

const char* layer_kind_name(LayerKind kind);

// One real layer. Tensors by kind:
//   linear  {weight (out, in, 1, 1), bias (1, out, 1, 1)}
//   conv    {weight (out, in, k, 1), bias (1, out, 1, 1)}
//   convT   {weight (in, out, k, 1), bias (1, out, 1, 1)}
//   gru     {w_ih (3h, in, 1, 1), w_hh (3h, h, 1, 1), b_ih (1, 3h, 1, 1),
//            b_hh (1, 3h, 1, 1)} with gate blocks ordered reset, update,
//            candidate.
// A linear layer operates on (B, in, 1, T): features on the channel axis.
struct LayerParams {
  LayerKind kind = LayerKind::kLinear;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t output_pad = 0;
  std::vector<Tensor> tensors;

  // Closed-form count from the hyperparameters.
  std::size_t param_count() const;
  // Sum of the stored tensor sizes.
  std::size_t stored_scalars() const;
};

// Analytic parameter count of a real layer.
std::size_t layer_param_count(LayerKind kind, std::size_t in, std::size_t out,
                              std::size_t kernel);

LayerParams make_linear(std::size_t in, std::size_t out);
LayerParams make_conv(std::size_t in, std::size_t out, std::size_t kernel,
                      std::size_t stride, std::size_t pad);
LayerParams make_conv_transpose(std::size_t in, std::size_t out,
                                std::size_t kernel, std::size_t stride,
                                std::size_t pad, std::size_t output_pad);
LayerParams make_gru(std::size_t in, std::size_t hidden);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]. Fan-in is in*kernel for
// linear/conv/convT and the hidden size for a GRU.
void init_uniform(LayerParams& p, std::mt19937_64& rng);

struct ComplexLayer {
  LayerParams l1;
  LayerParams l2;

  std::size_t param_count() const { return 2 * l1.param_count(); }
};

ComplexLayer make_complex(const LayerParams& shape_like);
void init_uniform(ComplexLayer& c, std::mt19937_64& rng);

Tensor linear_forward(const LayerParams& p, const Tensor& x);
Tensor conv_f_forward(const LayerParams& p, const Tensor& x);
Tensor convT_f_forward(const LayerParams& p, const Tensor& x);
// x is (B, in, 1, T); the recurrence runs along time from a zero state.
Tensor gru_forward(const LayerParams& p, const Tensor& x);
// Dispatch on p.kind.
Tensor layer_forward(const LayerParams& p, const Tensor& x);

// re = l1(re) - l2(im), im = l1(im) + l2(re). A GRU is lifted gate by gate:
// both affine maps of the cell use this rule and the gates use csigmoid and
// ctanh.
ComplexTensor complex_lift(const ComplexLayer& c, const ComplexTensor& z);
ComplexTensor complex_gru_forward(const ComplexLayer& c,
                                  const ComplexTensor& z);

enum class CreluVariant {
  kPrinted,    // Z/2 (1 + 1/(|Z| + 0.01))
  kCorrected,  // Z/2 (1 + Z/(|Z| + 0.01))
};

const char* crelu_variant_name(CreluVariant v);
CreluVariant parse_crelu_variant(const std::string& s);

ComplexTensor crelu(const ComplexTensor& z,
                    CreluVariant variant = CreluVariant::kPrinted);
// Z / sqrt(|Z|^2 + 1)
ComplexTensor ctanh(const ComplexTensor& z);
// (1 + ctanh(Z/2)) / 2
ComplexTensor csigmoid(const ComplexTensor& z);

enum class Activation { kNone, kRelu, kTanh, kSigmoid };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& s);

// Apply and book the per-element activation cost to the active counter.
Tensor activate(Activation a, const Tensor& x);
ComplexTensor activate(Activation a, const ComplexTensor& z,
                       CreluVariant variant);

}  // namespace hse
