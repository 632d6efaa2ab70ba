#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hse/layers.h"
#include "hse/model_spec.h"

namespace hse {

// Mask-model output M, or the hybrid pair (M_mag, S_cc).
struct MaskOutput {
  bool hybrid = false;
  ComplexTensor mask;
  Tensor mag_mask;
  ComplexTensor correction;
};

// S = M (.) Y, or S = M_mag (.) Y + S_cc for the hybrid pair.
ComplexTensor apply_output(const MaskOutput& out, const ComplexTensor& y);

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

enum class DebugInit {
  kIdentity,  // output S equals Y
  kZero,      // output S is silence
};

class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerPlan>& plan() const { return plan_; }

  // Uniform fan-in initialization, deterministic in seed.
  void init(std::uint64_t seed);
  void init_debug(DebugInit mode);

  // Stable order; names are unique.
  std::vector<NamedTensor> parameters();
  std::vector<Tensor> parameter_values() const;
  void set_parameter_values(const std::vector<Tensor>& values);

  std::size_t param_count() const;
  std::size_t stored_scalars() const;

  // Replaces every parameter with a copy watched on `tape`.
  void bind(Tape& tape);
  // Drops tape links from every parameter.
  void unbind();

  // z: (B, 1, bins, T) network input.
  MaskOutput forward(const ComplexTensor& z) const;

 private:
  struct Slot {
    LayerParams real;
    ComplexLayer cplx;
  };

  Tensor run_real_encoder(Tensor x, BranchId b) const;
  ComplexTensor run_complex_encoder(ComplexTensor z) const;
  Tensor run_real_decoder(Tensor x, BranchId b) const;
  ComplexTensor run_complex_decoder(ComplexTensor z) const;

  ModelSpec spec_;
  std::vector<LayerPlan> plan_;
  std::vector<Slot> slots_;
};

}  // namespace hse
