#pragma once

#include <stdexcept>
#include <string>

namespace hse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible extents, non-broadcastable operands, bad axis.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or supplied, log of a non-positive value.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent model / training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed files.
class IoError : public Error {
 public:
  using Error::Error;
};

// A parameter budget cannot be met within the requested tolerance.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// Frequency/channel geometry of a model and its input disagree.
class GeometryError : public Error {
 public:
  using Error::Error;
};

}  // namespace hse
