#include "hse/layers.h"

#include <cmath>

#include "hse/error.h"
#include "hse/mac_counter.h"
#include "hse/ops.h"

namespace hse {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kLinear: return "linear";
    case LayerKind::kConv: return "conv";
    case LayerKind::kConvTranspose: return "convT";
    case LayerKind::kGru: return "gru";
  }
  return "?";
}

std::size_t layer_param_count(LayerKind kind, std::size_t in, std::size_t out,
                              std::size_t kernel) {
  switch (kind) {
    case LayerKind::kLinear: return in * out + out;
    case LayerKind::kConv:
    case LayerKind::kConvTranspose: return in * out * kernel + out;
    case LayerKind::kGru: return 3 * (in * out + out * out + 2 * out);
  }
  return 0;
}

std::size_t LayerParams::param_count() const {
  return layer_param_count(kind, in, out, kernel);
}

std::size_t LayerParams::stored_scalars() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors) n += t.numel();
  return n;
}

LayerParams make_linear(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw ConfigError("linear layer with zero width");
  LayerParams p;
  p.kind = LayerKind::kLinear;
  p.in = in;
  p.out = out;
  p.tensors = {Tensor::zeros(Shape(out, in, 1, 1)),
               Tensor::zeros(Shape(1, out, 1, 1))};
  return p;
}

LayerParams make_conv(std::size_t in, std::size_t out, std::size_t kernel,
                      std::size_t stride, std::size_t pad) {
  if (in == 0 || out == 0 || kernel == 0 || stride == 0) {
    throw ConfigError("conv layer with zero width, kernel or stride");
  }
  LayerParams p;
  p.kind = LayerKind::kConv;
  p.in = in;
  p.out = out;
  p.kernel = kernel;
  p.stride = stride;
  p.pad = pad;
  p.tensors = {Tensor::zeros(Shape(out, in, kernel, 1)),
               Tensor::zeros(Shape(1, out, 1, 1))};
  return p;
}

LayerParams make_conv_transpose(std::size_t in, std::size_t out,
                                std::size_t kernel, std::size_t stride,
                                std::size_t pad, std::size_t output_pad) {
  if (in == 0 || out == 0 || kernel == 0 || stride == 0) {
    throw ConfigError("convT layer with zero width, kernel or stride");
  }
  LayerParams p;
  p.kind = LayerKind::kConvTranspose;
  p.in = in;
  p.out = out;
  p.kernel = kernel;
  p.stride = stride;
  p.pad = pad;
  p.output_pad = output_pad;
  p.tensors = {Tensor::zeros(Shape(in, out, kernel, 1)),
               Tensor::zeros(Shape(1, out, 1, 1))};
  return p;
}

LayerParams make_gru(std::size_t in, std::size_t hidden) {
  if (in == 0 || hidden == 0) throw ConfigError("gru with zero width");
  LayerParams p;
  p.kind = LayerKind::kGru;
  p.in = in;
  p.out = hidden;
  p.tensors = {Tensor::zeros(Shape(3 * hidden, in, 1, 1)),
               Tensor::zeros(Shape(3 * hidden, hidden, 1, 1)),
               Tensor::zeros(Shape(1, 3 * hidden, 1, 1)),
               Tensor::zeros(Shape(1, 3 * hidden, 1, 1))};
  return p;
}

void init_uniform(LayerParams& p, std::mt19937_64& rng) {
  const double fan_in = p.kind == LayerKind::kGru
                            ? static_cast<double>(p.out)
                            : static_cast<double>(p.in * p.kernel);
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Tensor& t : p.tensors) {
    std::vector<double> v(t.numel());
    for (double& x : v) x = dist(rng);
    t = Tensor(t.shape(), std::move(v));
  }
}

ComplexLayer make_complex(const LayerParams& shape_like) {
  ComplexLayer c{shape_like, shape_like};
  for (Tensor& t : c.l1.tensors) t = Tensor::zeros(t.shape());
  for (Tensor& t : c.l2.tensors) t = Tensor::zeros(t.shape());
  return c;
}

void init_uniform(ComplexLayer& c, std::mt19937_64& rng) {
  init_uniform(c.l1, rng);
  init_uniform(c.l2, rng);
}

namespace {

void expect_kind(const LayerParams& p, LayerKind kind) {
  if (p.kind != kind) {
    throw ConfigError(std::string("expected a ") + layer_kind_name(kind) +
                      " layer, got " + layer_kind_name(p.kind));
  }
}

void expect_channels(const LayerParams& p, const Tensor& x) {
  if (x.shape()[kChannel] != p.in) {
    throw ShapeError(std::string(layer_kind_name(p.kind)) + " expects " +
                     std::to_string(p.in) + " input channels, got " +
                     x.shape().str());
  }
}

}  // namespace

Tensor linear_forward(const LayerParams& p, const Tensor& x) {
  expect_kind(p, LayerKind::kLinear);
  expect_channels(p, x);
  if (x.shape()[kFreq] != 1) {
    throw ShapeError("linear input must have frequency extent 1, got " +
                     x.shape().str());
  }
  return conv_f(x, p.tensors[0], p.tensors[1], 1, 0);
}

Tensor conv_f_forward(const LayerParams& p, const Tensor& x) {
  expect_kind(p, LayerKind::kConv);
  expect_channels(p, x);
  return conv_f(x, p.tensors[0], p.tensors[1], p.stride, p.pad);
}

Tensor convT_f_forward(const LayerParams& p, const Tensor& x) {
  expect_kind(p, LayerKind::kConvTranspose);
  expect_channels(p, x);
  return conv_transpose_f(x, p.tensors[0], p.tensors[1], p.stride, p.pad,
                          p.output_pad);
}

Tensor gru_forward(const LayerParams& p, const Tensor& x) {
  expect_kind(p, LayerKind::kGru);
  expect_channels(p, x);
  if (x.shape()[kFreq] != 1) {
    throw ShapeError("gru input must have frequency extent 1, got " +
                     x.shape().str());
  }
  const std::size_t h = p.out;
  const std::size_t batch = x.shape()[kBatch];
  const std::size_t steps = x.shape()[kTime];
  const Tensor gx = conv_f(x, p.tensors[0], p.tensors[2], 1, 0);

  Tensor state = Tensor::zeros(Shape(batch, h, 1, 1));
  std::vector<Tensor> outs;
  outs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor gxt = slice(gx, kTime, t, t + 1);
    const Tensor gh = conv_f(state, p.tensors[1], p.tensors[3], 1, 0);
    const Tensor r = sigmoid(slice(gxt, kChannel, 0, h) +
                             slice(gh, kChannel, 0, h));
    const Tensor z = sigmoid(slice(gxt, kChannel, h, 2 * h) +
                             slice(gh, kChannel, h, 2 * h));
    const Tensor n = tanh(slice(gxt, kChannel, 2 * h, 3 * h) +
                          r * slice(gh, kChannel, 2 * h, 3 * h));
    state = n + z * (state - n);
    outs.push_back(state);
  }
  return concat(outs, kTime);
}

Tensor layer_forward(const LayerParams& p, const Tensor& x) {
  switch (p.kind) {
    case LayerKind::kLinear: return linear_forward(p, x);
    case LayerKind::kConv: return conv_f_forward(p, x);
    case LayerKind::kConvTranspose: return convT_f_forward(p, x);
    case LayerKind::kGru: return gru_forward(p, x);
  }
  throw ConfigError("unknown layer kind");
}

namespace {

void expect_twins(const ComplexLayer& c) {
  const LayerParams& a = c.l1;
  const LayerParams& b = c.l2;
  bool same = a.kind == b.kind && a.in == b.in && a.out == b.out &&
              a.kernel == b.kernel && a.stride == b.stride &&
              a.pad == b.pad && a.output_pad == b.output_pad &&
              a.tensors.size() == b.tensors.size();
  for (std::size_t i = 0; same && i < a.tensors.size(); ++i) {
    same = a.tensors[i].shape() == b.tensors[i].shape();
  }
  if (!same) throw ShapeError("complex layer halves disagree in shape");
}

// Eq.-(1) style lift of a biased 1x1 map given as raw tensors.
ComplexTensor lift_affine(const Tensor& w1, const Tensor& b1, const Tensor& w2,
                          const Tensor& b2, const ComplexTensor& z) {
  return {conv_f(z.re, w1, b1, 1, 0) - conv_f(z.im, w2, b2, 1, 0),
          conv_f(z.im, w1, b1, 1, 0) + conv_f(z.re, w2, b2, 1, 0)};
}

}  // namespace

ComplexTensor complex_lift(const ComplexLayer& c, const ComplexTensor& z) {
  expect_twins(c);
  if (c.l1.kind == LayerKind::kGru) return complex_gru_forward(c, z);
  return {layer_forward(c.l1, z.re) - layer_forward(c.l2, z.im),
          layer_forward(c.l1, z.im) + layer_forward(c.l2, z.re)};
}

ComplexTensor complex_gru_forward(const ComplexLayer& c,
                                  const ComplexTensor& z) {
  expect_twins(c);
  const LayerParams& p1 = c.l1;
  const LayerParams& p2 = c.l2;
  expect_kind(p1, LayerKind::kGru);
  expect_channels(p1, z.re);
  if (z.shape()[kFreq] != 1) {
    throw ShapeError("gru input must have frequency extent 1, got " +
                     z.shape().str());
  }
  const std::size_t h = p1.out;
  const std::size_t batch = z.shape()[kBatch];
  const std::size_t steps = z.shape()[kTime];
  const ComplexTensor gx = lift_affine(p1.tensors[0], p1.tensors[2],
                                       p2.tensors[0], p2.tensors[2], z);

  ComplexTensor state = ComplexTensor::zeros(Shape(batch, h, 1, 1));
  std::vector<ComplexTensor> outs;
  outs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const ComplexTensor gxt = cslice(gx, kTime, t, t + 1);
    const ComplexTensor gh = lift_affine(p1.tensors[1], p1.tensors[3],
                                         p2.tensors[1], p2.tensors[3], state);
    const ComplexTensor r = csigmoid(cadd(cslice(gxt, kChannel, 0, h),
                                          cslice(gh, kChannel, 0, h)));
    const ComplexTensor u = csigmoid(cadd(cslice(gxt, kChannel, h, 2 * h),
                                          cslice(gh, kChannel, h, 2 * h)));
    const ComplexTensor n =
        ctanh(cadd(cslice(gxt, kChannel, 2 * h, 3 * h),
                   cmul(r, cslice(gh, kChannel, 2 * h, 3 * h))));
    state = cadd(n, cmul(u, csub(state, n)));
    outs.push_back(state);
  }
  return cconcat(outs, kTime);
}

const char* crelu_variant_name(CreluVariant v) {
  return v == CreluVariant::kPrinted ? "printed" : "corrected";
}

CreluVariant parse_crelu_variant(const std::string& s) {
  if (s == "printed") return CreluVariant::kPrinted;
  if (s == "corrected") return CreluVariant::kCorrected;
  throw ConfigError("unknown crelu variant '" + s +
                    "' (expected printed or corrected)");
}

ComplexTensor crelu(const ComplexTensor& z, CreluVariant variant) {
  if (variant == CreluVariant::kPrinted) {
    const Tensor s = radial(
        z, [](double m) { return 0.5 * (1.0 + 1.0 / (m + 0.01)); },
        [](double m) { return -0.5 / ((m + 0.01) * (m + 0.01)); });
    return cmul(z, s);
  }
  const Tensor q = radial(
      z, [](double m) { return 0.5 / (m + 0.01); },
      [](double m) { return -0.5 / ((m + 0.01) * (m + 0.01)); });
  return cadd(cscale(z, 0.5), cmul(cmul(z, z), q));
}

ComplexTensor ctanh(const ComplexTensor& z) {
  const Tensor s = radial(
      z, [](double m) { return 1.0 / std::sqrt(m * m + 1.0); },
      [](double m) { return -m / std::pow(m * m + 1.0, 1.5); });
  return cmul(z, s);
}

ComplexTensor csigmoid(const ComplexTensor& z) {
  const ComplexTensor t = ctanh(cscale(z, 0.5));
  return {add(scale(t.re, 0.5), 0.5), scale(t.im, 0.5)};
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "none") return Activation::kNone;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

Tensor activate(Activation a, const Tensor& x) {
  const MacCosts* costs = macs::costs();
  switch (a) {
    case Activation::kNone: return x;
    case Activation::kRelu:
      if (costs) macs::add(costs->relu * x.numel());
      return relu(x);
    case Activation::kTanh:
      if (costs) macs::add(costs->tanh * x.numel());
      return tanh(x);
    case Activation::kSigmoid:
      if (costs) macs::add(costs->sigmoid * x.numel());
      return sigmoid(x);
  }
  return x;
}

ComplexTensor activate(Activation a, const ComplexTensor& z,
                       CreluVariant variant) {
  const MacCosts* costs = macs::costs();
  switch (a) {
    case Activation::kNone: return z;
    case Activation::kRelu:
      if (costs) macs::add(costs->crelu * z.numel());
      return crelu(z, variant);
    case Activation::kTanh:
      if (costs) macs::add(costs->ctanh * z.numel());
      return ctanh(z);
    case Activation::kSigmoid:
      if (costs) macs::add(costs->ctanh * z.numel());
      return csigmoid(z);
  }
  return z;
}

}  // namespace hse
