#include "hse/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <cstring>

#include "hse/error.h"

namespace hse {

struct RealFft::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(real);
    fftw_free(spec);
  }
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2) throw Error("FFT size must be at least 2");
  const int ni = static_cast<int>(n);
  impl_->real = fftw_alloc_real(n);
  impl_->spec = fftw_alloc_complex(n / 2 + 1);
  impl_->fwd = fftw_plan_dft_r2c_1d(ni, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r_1d(ni, impl_->spec, impl_->real, FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->inv) throw Error("FFTW planning failed");
}

RealFft::~RealFft() = default;

void RealFft::forward(const double* in, std::complex<double>* out) {
  std::memcpy(impl_->real, in, n_ * sizeof(double));
  fftw_execute(impl_->fwd);
  for (std::size_t k = 0; k < bins(); ++k) {
    out[k] = {impl_->spec[k][0], impl_->spec[k][1]};
  }
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  for (std::size_t k = 0; k < bins(); ++k) {
    impl_->spec[k][0] = in[k].real();
    impl_->spec[k][1] = in[k].imag();
  }
  fftw_execute(impl_->inv);
  const double s = 1.0 / static_cast<double>(n_);
  for (std::size_t t = 0; t < n_; ++t) out[t] = impl_->real[t] * s;
}

}  // namespace hse
