#pragma once

#include <complex>
#include <cstddef>
#include <memory>

namespace hse {

// Real-input DFT of a fixed size n with n/2+1 output bins.
// inverse() returns (1/n) sum_k X_k e^{+2 pi i k t / n}, so inverse(forward(x))
// reproduces x.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  void forward(const double* in, std::complex<double>* out);
  void inverse(const std::complex<double>* in, double* out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hse
