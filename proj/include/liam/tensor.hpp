#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace liam {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t numel(const Shape& shape);

/// Raised when operands cannot be combined; the message names every shape involved.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an op produces NaN/Inf. `op()` names the offending primitive.
class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(std::string op);
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

namespace ad {

/// While alive, ops on the current thread record no history (evaluation mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the grads of its inputs.
  std::function<void(Node&)> backward;
};

/// Handle to a node of the differentiation graph. Copies share the node.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<T> data);
  static Tensor leaf(Shape shape, std::vector<T> data, bool requires_grad = true);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(T v, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const T> data() const { return node_->value; }
  // Direct storage access for optimizers and finite-difference probes.
  std::span<T> mutable_data() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }

  T item() const;
  T at(std::size_t i) const { return node_->value[i]; }
  T at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  const char* op() const { return node_->op; }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }

  /// Value copy with no history.
  Tensor detach() const;

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Nodes reachable from `root` that require gradients, inputs before consumers.
template <typename T>
std::vector<Node<T>*> topological_order(const Tensor<T>& root);

/// Populates `grad` on every requires_grad node reachable from the scalar `loss`.
/// Gradients are reset first, so repeated calls on the same graph agree exactly.
template <typename T>
void backward(const Tensor<T>& loss);

namespace detail {
void check_finite(const char* op, std::span<const float> v);
void check_finite(const char* op, std::span<const double> v);

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value,
                      std::vector<std::shared_ptr<Node<T>>> inputs,
                      std::function<void(Node<T>&)> backward);

template <typename T>
inline bool wants_grad(const std::shared_ptr<Node<T>>& n) {
  return n->requires_grad;
}
}  // namespace detail

}  // namespace ad

using Tensor = ad::Tensor<float>;
using Tensor64 = ad::Tensor<double>;

}  // namespace liam
