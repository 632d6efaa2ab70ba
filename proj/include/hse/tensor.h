#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hse {

// Every tensor is four-dimensional: (batch, channel, frequency, time).
// Lower-rank data uses extent 1 on the unused axes.
enum Axis : int { kBatch = 0, kChannel = 1, kFreq = 2, kTime = 3 };

struct Shape {
  std::array<std::size_t, 4> dims{1, 1, 1, 1};

  constexpr Shape() = default;
  constexpr Shape(std::size_t b, std::size_t c, std::size_t f, std::size_t t)
      : dims{b, c, f, t} {}

  constexpr std::size_t operator[](int axis) const { return dims[axis]; }
  constexpr std::size_t& operator[](int axis) { return dims[axis]; }
  constexpr std::size_t numel() const {
    return dims[0] * dims[1] * dims[2] * dims[3];
  }
  constexpr bool is_scalar() const { return numel() == 1; }
  bool operator==(const Shape&) const = default;

  // Row-major stride of `axis`.
  constexpr std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = 3; a > axis; --a) s *= dims[a];
    return s;
  }

  std::string str() const;
};

namespace detail {
struct TapeState;
}

class Tensor;

// Backward closure: receives the gradient w.r.t. the op's output and one
// (possibly empty) accumulation buffer per input. Empty buffers belong to
// untracked inputs and must be skipped.
using BackwardFn =
    std::function<void(std::span<const double>, std::span<std::span<double>>)>;

// Immutable dense tensor of 64-bit reals. Copies share storage. A tensor
// produced by an operation on tracked inputs carries a link to the tape
// node that produced it.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return shape_.numel(); }
  std::span<const double> values() const { return *data_; }
  const std::vector<double>& vec() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t b, std::size_t c, std::size_t f, std::size_t t) const;
  double item() const;

  bool tracked() const { return tape_ != nullptr; }
  int node() const { return node_; }
  const std::shared_ptr<detail::TapeState>& tape_state() const {
    return tape_;
  }
  // Backward closures capture storage, never tensors, so that tape nodes do
  // not keep the tape itself alive.
  const std::shared_ptr<const std::vector<double>>& storage() const {
    return data_;
  }

  // Same values, no tape link.
  Tensor detach() const;

 private:
  friend class Tape;
  friend Tensor record_op(Shape, std::vector<double>,
                          const std::vector<const Tensor*>&, BackwardFn);
  friend Tensor make_shared_view(const Tensor&, Shape);

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  std::shared_ptr<detail::TapeState> tape_;
  int node_ = -1;
};

using RealTensor = Tensor;

// A complex tensor is a pair of real tensors; gradients flow to both parts
// independently.
struct ComplexTensor {
  Tensor re;
  Tensor im;

  ComplexTensor() = default;
  ComplexTensor(Tensor real, Tensor imag);
  static ComplexTensor zeros(Shape shape);

  const Shape& shape() const { return re.shape(); }
  std::size_t numel() const { return re.numel(); }
  bool tracked() const { return re.tracked() || im.tracked(); }
};

// Records a new tensor. When any input is tracked a tape node is appended;
// otherwise the result is an ordinary constant.
Tensor record_op(Shape shape, std::vector<double> values,
                 const std::vector<const Tensor*>& inputs, BackwardFn fn);

// Reinterprets storage under a new shape of equal element count. The view
// is recorded as an identity op when the source is tracked.
Tensor make_shared_view(const Tensor& x, Shape shape);

// Gradients of a scalar root w.r.t. every tracked ancestor.
class Gradients {
 public:
  bool contains(const Tensor& t) const;
  Tensor of(const Tensor& t) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<int, Tensor> grads_;
};

// Append-only record of operations. Tensors created through `watch` are the
// leaves gradients are taken against. Tracked tensors share ownership of the
// node list, so a tape's nodes live as long as any tensor recorded on it.
enum class GradRetention {
  kAll,     // every tracked ancestor of the root
  kLeaves,  // only watched leaves; intermediate buffers are freed early
};

class Tape {
 public:
  Tape();

  Tensor watch(const Tensor& value);
  ComplexTensor watch(const ComplexTensor& value);

  std::size_t size() const;
  Gradients backward(const Tensor& root,
                     GradRetention keep = GradRetention::kAll) const;

  const std::shared_ptr<detail::TapeState>& state() const { return state_; }

  // Handle onto an existing tape, e.g. the one a tracked tensor lives on.
  static Tape attach(std::shared_ptr<detail::TapeState> state);

 private:
  std::shared_ptr<detail::TapeState> state_;
};

// Convenience: backward on whatever tape the root was recorded on. An
// untracked root yields an empty gradient map.
Gradients backward(const Tensor& root);

// Central finite differences of a scalar function, one coordinate at a time.
Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double eps);

// Finite-value checks after every op. On by default.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

}  // namespace hse
