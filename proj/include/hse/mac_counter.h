#pragma once

#include <cstdint>

namespace hse {

// Per-element MAC bookings for activations and conversions.
struct MacCosts {
  std::uint64_t relu = 1;
  std::uint64_t tanh = 1;
  std::uint64_t sigmoid = 1;
  std::uint64_t crelu = 5;
  std::uint64_t ctanh = 4;
  std::uint64_t magnitude = 3;

  static MacCosts zero() { return {0, 0, 0, 0, 0, 0}; }
};

enum class MacBucket { kReal, kComplex };

// Accumulates multiply-accumulates performed by the kernels while it is
// installed on the current thread.
struct MacCounter {
  MacCosts costs;
  std::uint64_t real = 0;
  std::uint64_t complex = 0;

  std::uint64_t total() const { return real + complex; }
};

class ScopedMacCounter {
 public:
  explicit ScopedMacCounter(MacCounter& counter);
  ~ScopedMacCounter();
  ScopedMacCounter(const ScopedMacCounter&) = delete;
  ScopedMacCounter& operator=(const ScopedMacCounter&) = delete;

 private:
  MacCounter* previous_;
};

// Routes bookings to the complex bucket for its lifetime.
class ScopedComplexBucket {
 public:
  ScopedComplexBucket();
  ~ScopedComplexBucket();
  ScopedComplexBucket(const ScopedComplexBucket&) = delete;
  ScopedComplexBucket& operator=(const ScopedComplexBucket&) = delete;

 private:
  bool previous_;
};

namespace macs {

bool active();
void add(std::uint64_t n);
void add(std::uint64_t n, MacBucket bucket);
// Null when no counter is installed.
const MacCosts* costs();

}  // namespace macs

}  // namespace hse
