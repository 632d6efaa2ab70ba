#include "hse/tensor.h"

#include <atomic>
#include <cmath>
#include <sstream>

#include "hse/error.h"

namespace hse {

namespace detail {

struct Node {
  std::vector<int> inputs;  // -1 for untracked inputs
  std::size_t numel = 0;
  Shape shape;
  BackwardFn fn;  // empty for leaves
};

struct TapeState {
  std::vector<Node> nodes;
};

}  // namespace detail

namespace {

std::atomic<bool> g_finite_checks{true};

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value in ") + what);
    }
  }
}

}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks_enabled() { return g_finite_checks; }

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << dims[0] << ", " << dims[1] << ", " << dims[2] << ", "
     << dims[3] << ')';
  return os.str();
}

Tensor::Tensor()
    : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape) {
  if (values.size() != shape.numel()) {
    throw ShapeError("tensor of shape " + shape.str() + " needs " +
                     std::to_string(shape.numel()) + " values, got " +
                     std::to_string(values.size()));
  }
  check_finite(values, "tensor construction");
  data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor Tensor::zeros(Shape shape) { return full(shape, 0.0); }
Tensor Tensor::ones(Shape shape) { return full(shape, 1.0); }
Tensor Tensor::full(Shape shape, double value) {
  return Tensor(shape, std::vector<double>(shape.numel(), value));
}
Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

double Tensor::at(std::size_t b, std::size_t c, std::size_t f,
                  std::size_t t) const {
  return (*data_)[((b * shape_[1] + c) * shape_[2] + f) * shape_[3] + t];
}

double Tensor::item() const {
  if (!shape_.is_scalar()) {
    throw ShapeError("item() on non-scalar tensor " + shape_.str());
  }
  return (*data_)[0];
}

Tensor Tensor::detach() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = data_;
  return t;
}

ComplexTensor::ComplexTensor(Tensor real, Tensor imag)
    : re(std::move(real)), im(std::move(imag)) {
  if (re.shape() != im.shape()) {
    throw ShapeError("complex parts disagree: " + re.shape().str() + " vs " +
                     im.shape().str());
  }
}

ComplexTensor ComplexTensor::zeros(Shape shape) {
  return {Tensor::zeros(shape), Tensor::zeros(shape)};
}

Tensor record_op(Shape shape, std::vector<double> values,
                 const std::vector<const Tensor*>& inputs, BackwardFn fn) {
  if (g_finite_checks) check_finite(values, "op result");
  Tensor out;
  out.shape_ = shape;
  out.data_ = std::make_shared<const std::vector<double>>(std::move(values));

  std::shared_ptr<detail::TapeState> tape;
  for (const Tensor* in : inputs) {
    if (!in->tracked()) continue;
    if (tape && tape != in->tape_state()) {
      throw Error("operands recorded on different tapes");
    }
    tape = in->tape_state();
  }
  if (!tape) return out;

  detail::Node node;
  node.numel = shape.numel();
  node.shape = shape;
  node.fn = std::move(fn);
  for (const Tensor* in : inputs) node.inputs.push_back(in->node());
  tape->nodes.push_back(std::move(node));
  out.tape_ = tape;
  out.node_ = static_cast<int>(tape->nodes.size()) - 1;
  return out;
}

Tensor make_shared_view(const Tensor& x, Shape shape) {
  if (shape.numel() != x.numel()) {
    throw ShapeError("cannot view " + x.shape().str() + " as " + shape.str());
  }
  if (!x.tracked()) {
    Tensor out = x.detach();
    out.shape_ = shape;
    return out;
  }
  Tensor out;
  out.shape_ = shape;
  out.data_ = x.data_;
  detail::Node node;
  node.numel = shape.numel();
  node.shape = shape;
  node.inputs = {x.node()};
  node.fn = [](std::span<const double> g, std::span<std::span<double>> gin) {
    for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
  };
  x.tape_->nodes.push_back(std::move(node));
  out.tape_ = x.tape_;
  out.node_ = static_cast<int>(x.tape_->nodes.size()) - 1;
  return out;
}

bool Gradients::contains(const Tensor& t) const {
  return t.tracked() && grads_.count(t.node()) > 0;
}

Tensor Gradients::of(const Tensor& t) const {
  if (!t.tracked()) throw Error("gradient requested for untracked tensor");
  auto it = grads_.find(t.node());
  if (it == grads_.end()) {
    // Tracked but not an ancestor of the root: zero gradient.
    return Tensor::zeros(t.shape());
  }
  return it->second;
}

Tape::Tape() : state_(std::make_shared<detail::TapeState>()) {}

Tensor Tape::watch(const Tensor& value) {
  Tensor out = value.detach();
  detail::Node node;
  node.numel = value.numel();
  node.shape = value.shape();
  state_->nodes.push_back(std::move(node));
  out.tape_ = state_;
  out.node_ = static_cast<int>(state_->nodes.size()) - 1;
  return out;
}

ComplexTensor Tape::watch(const ComplexTensor& value) {
  return {watch(value.re), watch(value.im)};
}

std::size_t Tape::size() const { return state_->nodes.size(); }

Gradients Tape::backward(const Tensor& root, GradRetention keep) const {
  if (!root.shape().is_scalar()) {
    throw ShapeError("backward root must be scalar, got " +
                     root.shape().str());
  }
  Gradients result;
  if (!root.tracked()) return result;
  if (root.tape_state() != state_) {
    throw Error("backward root belongs to a different tape");
  }

  const auto& nodes = state_->nodes;
  std::vector<std::vector<double>> grads(nodes.size());
  grads[root.node()] = {1.0};
  std::vector<std::span<double>> gin;
  for (int i = root.node(); i >= 0; --i) {
    if (grads[i].empty()) continue;
    const detail::Node& node = nodes[i];
    if (!node.fn) continue;
    gin.assign(node.inputs.size(), std::span<double>());
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      int j = node.inputs[k];
      if (j < 0) continue;
      if (grads[j].empty()) grads[j].assign(nodes[j].numel, 0.0);
      gin[k] = grads[j];
    }
    node.fn(grads[i], gin);
    if (keep == GradRetention::kLeaves) std::vector<double>().swap(grads[i]);
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) continue;
    result.grads_.emplace(static_cast<int>(i),
                          Tensor(nodes[i].shape, std::move(grads[i])));
  }
  return result;
}

Tape Tape::attach(std::shared_ptr<detail::TapeState> state) {
  Tape t;
  t.state_ = std::move(state);
  return t;
}

Gradients backward(const Tensor& root) {
  if (!root.shape().is_scalar()) {
    throw ShapeError("backward root must be scalar, got " +
                     root.shape().str());
  }
  if (!root.tracked()) return {};
  return Tape::attach(root.tape_state()).backward(root);
}

Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw Error("finite difference step must be positive");
  std::vector<double> base = x.vec();
  std::vector<double> grad(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double orig = base[i];
    base[i] = orig + eps;
    const double fp = f(Tensor(x.shape(), base));
    base[i] = orig - eps;
    const double fm = f(Tensor(x.shape(), base));
    base[i] = orig;
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return Tensor(x.shape(), std::move(grad));
}

}  // namespace hse
