// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_TENSOR_HPP_
#define CONCATENET_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace concatenet {

using Shape = std::vector<std::size_t>;

/// Thrown when tensor shapes (or channel/band counts) do not satisfy an
/// operation's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  // Empty until the first gradient is accumulated.
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major array of doubles with optional gradient tracking.
///
/// Tensor is a handle: copies share storage and graph position. Use clone()
/// for an independent copy. Operations on tensors that require grad record
/// a backward closure; calling backward() on a scalar result walks the graph
/// in reverse topological order. Leaf gradients accumulate across calls
/// until zero_grad().
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t dim() const { return node_->shape.size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<double> data() { return node_->data; }
  std::span<const double> data() const { return node_->data; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  bool has_grad() const { return node_->grad.size() == node_->data.size() && numel() > 0; }
  /// Gradient buffer; empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Reverse-mode pass from a scalar. Non-leaf gradients are reset first so
  /// repeated calls accumulate only into leaves.
  void backward();

  Tensor clone() const;
  /// Same storage semantics as clone() but never tracks gradients.
  Tensor detach() const;
  /// Reinterprets the shape; element count must match. Shares no storage.
  Tensor reshape(Shape shape) const;

  bool defined() const { return static_cast<bool>(node_); }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

  using BackwardFn = std::function<void(detail::Node&)>;
  /// Builds a result tensor. The backward closure is recorded only when
  /// gradient mode is on and some input requires grad.
  static Tensor make_result(Shape shape, std::vector<double> data,
                            std::initializer_list<Tensor> inputs,
                            BackwardFn backward);
  static Tensor make_result(Shape shape, std::vector<double> data,
                            std::span<const Tensor> inputs,
                            BackwardFn backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

}  // namespace concatenet

#endif  // CONCATENET_TENSOR_HPP_
