#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sbl/numerics/tensor.hpp"

namespace sbl {

/// One value in the reverse-mode graph. Ops create nodes holding their forward
/// result, the parents they read, and a closure that pushes `grad` back into
/// the parents' gradient buffers.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  // Gradient accumulator, allocated as zeros on first use.
  Tensor& grad_buffer();
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var leaf(Tensor value);

  const Tensor& value() const { return node_->value; }
  // Direct write access for optimizers and finite-difference probes. Writing
  // while a graph that reads this node awaits backward() is undefined.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  // Accumulated gradient; zeros when nothing has flowed back yet.
  const Tensor& grad() const { return node_->grad_buffer(); }
  void zero_grad() const;

  // Seeds d(self)/d(self) = 1 and propagates. Self must hold one value.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var make_op(Tensor, std::vector<Var>, std::function<void(Node&)>);

  std::shared_ptr<Node> node_;
};

/// Builds an op result. When no parent requires a gradient, or gradient
/// recording is disabled on this thread, the result is a plain constant.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Disables graph recording on the current thread for its lifetime.
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

/// Fingerprint of the piecewise-linear branch every relu/max op takes during a
/// forward pass. Two forward passes with equal fingerprints evaluate the same
/// smooth piece, which is how grad_check tells a kink crossing from a bad
/// gradient.
class KinkRecorder {
 public:
  KinkRecorder();
  ~KinkRecorder();
  KinkRecorder(const KinkRecorder&) = delete;
  KinkRecorder& operator=(const KinkRecorder&) = delete;

  std::uint64_t fingerprint() const { return hash_; }

  static void record(std::span<const std::uint8_t> mask);
  static void record(std::span<const std::size_t> indices);

 private:
  void mix(std::uint64_t v);

  std::uint64_t hash_;
  KinkRecorder* previous_;
};

}  // namespace sbl
