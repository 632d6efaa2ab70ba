#include "hse/model.h"

#include <random>

#include "hse/conversion.h"
#include "hse/dsp.h"
#include "hse/error.h"
#include "hse/mac_counter.h"
#include "hse/ops.h"

namespace hse {

ComplexTensor apply_output(const MaskOutput& out, const ComplexTensor& y) {
  if (!out.hybrid) {
    if (out.mask.shape() != y.shape()) {
      throw ShapeError("mask " + out.mask.shape().str() +
                       " does not match spectrogram " + y.shape().str());
    }
    return cmul(out.mask, y);
  }
  if (out.mag_mask.shape() != y.shape() || out.correction.shape() != y.shape()) {
    throw ShapeError("hybrid output " + out.mag_mask.shape().str() +
                     " does not match spectrogram " + y.shape().str());
  }
  return cadd(cmul(y, out.mag_mask), out.correction);
}

namespace {

LayerParams make_layer(const LayerPlan& p) {
  switch (p.kind) {
    case LayerKind::kLinear: return make_linear(p.in, p.out);
    case LayerKind::kConv:
      return make_conv(p.in, p.out, p.kernel, p.stride, p.pad);
    case LayerKind::kConvTranspose:
      return make_conv_transpose(p.in, p.out, p.kernel, p.stride, p.pad,
                                 p.output_pad);
    case LayerKind::kGru: return make_gru(p.in, p.out);
  }
  throw ConfigError("unknown layer kind");
}

const char* tensor_suffix(LayerKind kind, std::size_t i) {
  if (kind == LayerKind::kGru) {
    static const char* names[] = {"w_ih", "w_hh", "b_ih", "b_hh"};
    return names[i];
  }
  return i == 0 ? "weight" : "bias";
}

}  // namespace

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  plan_ = plan_layers(spec_);
  for (const LayerPlan& p : plan_) {
    Slot s;
    if (p.complex) {
      s.cplx = make_complex(make_layer(p));
    } else {
      s.real = make_layer(p);
    }
    slots_.push_back(std::move(s));
  }
}

void Model::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    if (plan_[i].complex) {
      init_uniform(slots_[i].cplx, rng);
    } else {
      init_uniform(slots_[i].real, rng);
    }
  }
}

void Model::init_debug(DebugInit mode) {
  if (spec_.domain == Domain::kReal) {
    throw ConfigError(
        "debug initializations need a complex or hybrid model (a real "
        "model's per-channel bias cannot express a unit complex mask)");
  }
  for (NamedTensor& nt : parameters()) *nt.tensor = Tensor::zeros(nt.tensor->shape());
  // Last decoder layer of each branch.
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const LayerPlan& p = plan_[i];
    const bool last = p.part == Part::kDecoder &&
                      (i + 1 == plan_.size() || plan_[i + 1].branch != p.branch);
    if (!last) continue;
    if (spec_.domain == Domain::kHybrid && p.branch == BranchId::kReal) {
      // Saturated sigmoid: exactly 1 or exactly 0 in double precision.
      const double b = mode == DebugInit::kIdentity ? 1000.0 : -1000.0;
      slots_[i].real.tensors[1] = Tensor::full(Shape(1, 1, 1, 1), b);
    } else if (spec_.domain == Domain::kComplex &&
               mode == DebugInit::kIdentity) {
      // re = b1 - b2 = 1, im = b1 + b2 = 0
      slots_[i].cplx.l1.tensors[1] = Tensor::full(Shape(1, 1, 1, 1), 0.5);
      slots_[i].cplx.l2.tensors[1] = Tensor::full(Shape(1, 1, 1, 1), -0.5);
    }
  }
}

std::vector<NamedTensor> Model::parameters() {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const LayerPlan& p = plan_[i];
    auto add = [&](LayerParams& lp, const std::string& prefix) {
      for (std::size_t k = 0; k < lp.tensors.size(); ++k) {
        out.push_back({prefix + "." + tensor_suffix(lp.kind, k), &lp.tensors[k]});
      }
    };
    if (p.complex) {
      add(slots_[i].cplx.l1, p.name + ".l1");
      add(slots_[i].cplx.l2, p.name + ".l2");
    } else {
      add(slots_[i].real, p.name);
    }
  }
  return out;
}

std::vector<Tensor> Model::parameter_values() const {
  std::vector<Tensor> out;
  for (NamedTensor& nt : const_cast<Model*>(this)->parameters()) {
    out.push_back(nt.tensor->detach());
  }
  return out;
}

void Model::set_parameter_values(const std::vector<Tensor>& values) {
  auto params = parameters();
  if (values.size() != params.size()) {
    throw ShapeError("expected " + std::to_string(params.size()) +
                     " parameter tensors, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i].tensor->shape()) {
      throw ShapeError("parameter " + params[i].name + " expects " +
                       params[i].tensor->shape().str() + ", got " +
                       values[i].shape().str());
    }
    *params[i].tensor = values[i].detach();
  }
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const LayerPlan& p : plan_) n += p.params();
  return n;
}

std::size_t Model::stored_scalars() const {
  std::size_t n = 0;
  for (const Tensor& t : parameter_values()) n += t.numel();
  return n;
}

void Model::bind(Tape& tape) {
  for (NamedTensor& nt : parameters()) *nt.tensor = tape.watch(*nt.tensor);
}

void Model::unbind() {
  for (NamedTensor& nt : parameters()) *nt.tensor = nt.tensor->detach();
}

Tensor Model::run_real_encoder(Tensor x, BranchId b) const {
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const LayerPlan& p = plan_[i];
    if (p.branch != b || p.part != Part::kEncoder) continue;
    if (p.kind == LayerKind::kGru && x.shape()[kFreq] != 1) {
      const Shape s = x.shape();
      x = reshape(x, Shape(s[0], s[1] * s[2], 1, s[3]));
    }
    x = activate(p.activation, layer_forward(slots_[i].real, x));
  }
  if (spec_.family == Family::kCrn) {
    const std::size_t fb = bottleneck_bins(spec_, b);
    const Shape s = x.shape();
    x = reshape(x, Shape(s[0], s[1] / fb, fb, s[3]));
  }
  return x;
}

ComplexTensor Model::run_complex_encoder(ComplexTensor z) const {
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const LayerPlan& p = plan_[i];
    if (p.branch != BranchId::kComplex || p.part != Part::kEncoder) continue;
    if (p.kind == LayerKind::kGru && z.shape()[kFreq] != 1) {
      const Shape s = z.shape();
      z = creshape(z, Shape(s[0], s[1] * s[2], 1, s[3]));
    }
    z = activate(p.activation, complex_lift(slots_[i].cplx, z),
                 spec_.crelu_variant);
  }
  if (spec_.family == Family::kCrn) {
    const std::size_t fb = bottleneck_bins(spec_, BranchId::kComplex);
    const Shape s = z.shape();
    z = creshape(z, Shape(s[0], s[1] / fb, fb, s[3]));
  }
  return z;
}

Tensor Model::run_real_decoder(Tensor x, BranchId b) const {
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const LayerPlan& p = plan_[i];
    if (p.branch != b || p.part != Part::kDecoder) continue;
    x = activate(p.activation, layer_forward(slots_[i].real, x));
  }
  return x;
}

ComplexTensor Model::run_complex_decoder(ComplexTensor z) const {
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const LayerPlan& p = plan_[i];
    if (p.branch != BranchId::kComplex || p.part != Part::kDecoder) continue;
    z = activate(p.activation, complex_lift(slots_[i].cplx, z),
                 spec_.crelu_variant);
  }
  return z;
}

MaskOutput Model::forward(const ComplexTensor& z) const {
  const Shape& s = z.shape();
  if (s[kChannel] != 1 || s[kFreq] != spec_.bins) {
    throw GeometryError("model '" + spec_.name + "' expects (B, 1, " +
                        std::to_string(spec_.bins) + ", T) input, got " +
                        s.str());
  }
  MaskOutput out;
  switch (spec_.domain) {
    case Domain::kReal: {
      const Tensor x = cart_c2r(z);
      const Tensor y = run_real_decoder(run_real_encoder(x, BranchId::kReal),
                                        BranchId::kReal);
      out.mask = cart_r2c(y);
      break;
    }
    case Domain::kComplex: {
      ScopedComplexBucket bucket;
      out.mask = run_complex_decoder(run_complex_encoder(z));
      break;
    }
    case Domain::kHybrid: {
      const Tensor er = run_real_encoder(mag_convert(z), BranchId::kReal);
      ComplexTensor ec;
      {
        ScopedComplexBucket bucket;
        ec = run_complex_encoder(z);
      }
      const Tensor real_in = concat(
          {er, fold_freq_to_channel(cart_c2r(ec), FoldDirection::kHalveFreq)},
          kChannel);
      const ComplexTensor complex_in = cconcat(
          {ec, cart_r2c(fold_freq_to_channel(er, FoldDirection::kDoubleFreq))},
          kChannel);
      out.hybrid = true;
      out.mag_mask = run_real_decoder(real_in, BranchId::kReal);
      ScopedComplexBucket bucket;
      out.correction = run_complex_decoder(complex_in);
      if (spec_.input_mode == InputMode::kWarped) {
        out.correction = denormalize_correction(out.correction);
      }
      break;
    }
  }
  return out;
}

}  // namespace hse
