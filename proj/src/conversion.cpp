#include "hse/conversion.h"

#include "hse/error.h"
#include "hse/mac_counter.h"
#include "hse/ops.h"

namespace hse {

const char* conversion_name(ConversionKind k) {
  switch (k) {
    case ConversionKind::kMag: return "mag";
    case ConversionKind::kCartR2C: return "cart_r2c";
    case ConversionKind::kCartC2R: return "cart_c2r";
  }
  return "?";
}

ConversionKind parse_conversion(const std::string& s) {
  if (s == "mag") return ConversionKind::kMag;
  if (s == "cart_r2c") return ConversionKind::kCartR2C;
  if (s == "cart_c2r") return ConversionKind::kCartC2R;
  throw ConfigError("unknown conversion '" + s + "'");
}

const char* align_name(Align a) {
  return a == Align::kNone ? "none" : "fold_freq_to_channel";
}

Align parse_align(const std::string& s) {
  if (s == "none") return Align::kNone;
  if (s == "fold_freq_to_channel") return Align::kFoldFreqToChannel;
  throw ConfigError("unknown alignment '" + s + "'");
}

Tensor mag_convert(const ComplexTensor& z) {
  if (const MacCosts* costs = macs::costs()) {
    macs::add(costs->magnitude * z.numel(), MacBucket::kReal);
  }
  return magnitude(z);
}

ComplexTensor cart_r2c(const Tensor& r) {
  const std::size_t f = r.shape()[kFreq];
  if (f % 2 != 0) {
    throw ShapeError("cart_r2c needs an even frequency extent, got " +
                     r.shape().str());
  }
  return {slice(r, kFreq, 0, f / 2), slice(r, kFreq, f / 2, f)};
}

Tensor cart_c2r(const ComplexTensor& z) { return concat({z.re, z.im}, kFreq); }

Tensor fold_freq_to_channel(const Tensor& x, FoldDirection dir) {
  Shape s = x.shape();
  if (dir == FoldDirection::kHalveFreq) {
    if (s[kFreq] % 2 != 0) {
      throw ShapeError("cannot fold odd frequency extent of " + s.str());
    }
    s[kFreq] /= 2;
    s[kChannel] *= 2;
  } else {
    if (s[kChannel] % 2 != 0) {
      throw ShapeError("cannot unfold odd channel extent of " + s.str());
    }
    s[kChannel] /= 2;
    s[kFreq] *= 2;
  }
  return reshape(x, s);
}

}  // namespace hse
