#pragma once

#include <string>

#include "hse/tensor.h"

namespace hse {

enum class ConversionKind { kMag, kCartR2C, kCartC2R };
enum class Align { kNone, kFoldFreqToChannel };

// Placement record carried by model specs. The axis is always frequency.
struct ConversionSpec {
  ConversionKind kind = ConversionKind::kMag;
  Align align = Align::kNone;
};

const char* conversion_name(ConversionKind k);
ConversionKind parse_conversion(const std::string& s);
const char* align_name(Align a);
Align parse_align(const std::string& s);

// |Z| elementwise. Books the magnitude cost per element to the real bucket.
Tensor mag_convert(const ComplexTensor& z);

// First frequency half becomes the real part, second half the imaginary part.
ComplexTensor cart_r2c(const Tensor& r);
// Concatenates re and im along frequency.
Tensor cart_c2r(const ComplexTensor& z);

enum class FoldDirection {
  kHalveFreq,   // (B, C, 2F, T) -> (B, 2C, F, T)
  kDoubleFreq,  // (B, 2C, F, T) -> (B, C, 2F, T)
};

// Moves a factor of two between the channel and frequency axes. Storage
// order is kept, so each output channel holds one contiguous half of an
// input channel's frequency rows.
Tensor fold_freq_to_channel(const Tensor& x, FoldDirection dir);

}  // namespace hse
