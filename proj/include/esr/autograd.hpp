// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "esr/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace esr {

/// A value in the computation graph. Leaves that require grad are the
/// handles parameters and differentiable inputs expose to the tape.
template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;  // empty until something flows in
  bool requires_grad = false;

  Node() = default;
  Node(Tensor<Scalar> v, bool rg) : value(std::move(v)), requires_grad(rg) {}

  [[nodiscard]] bool has_grad() const { return !grad.empty(); }

  Tensor<Scalar>& ensure_grad() {
    if (grad.empty()) grad = Tensor<Scalar>::zeros(value.shape());
    return grad;
  }

  void zero_grad() { grad = Tensor<Scalar>(); }
};

template <typename Scalar>
using Var = std::shared_ptr<Node<Scalar>>;

template <typename Scalar>
Var<Scalar> make_var(Tensor<Scalar> value, bool requires_grad = false) {
  return std::make_shared<Node<Scalar>>(std::move(value), requires_grad);
}

/// Linear record of executed operations. Operations append in execution
/// order, so replaying adjoints in reverse is a valid topological sweep.
template <typename Scalar>
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor<Scalar>& grad_output)>;

  struct Record {
    std::string op;
    Var<Scalar> output;
    BackwardFn backward;  // empty when no input needed a gradient
  };

  Tape() = default;
  explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}

  [[nodiscard]] bool grad_enabled() const { return grad_enabled_; }

  /// Wraps an op result. The backward closure is kept only when gradients
  /// are enabled and some input requires them.
  Var<Scalar> record(std::string op, Tensor<Scalar> value, bool needs_grad, BackwardFn backward) {
    const bool rg = grad_enabled_ && needs_grad;
    auto out = make_var(std::move(value), rg);
    records_.push_back(Record{std::move(op), out, rg ? std::move(backward) : BackwardFn{}});
    return out;
  }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded adjoint in reverse.
  void backward(const Var<Scalar>& loss) {
    if (loss->value.size() != 1) {
      throw ShapeError("backward requires a scalar loss, got shape " +
                       shape_to_string(loss->value.shape()));
    }
    if (!loss->requires_grad) return;
    loss->ensure_grad()[0] += Scalar(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      if (!it->backward || !it->output->has_grad()) continue;
      it->backward(it->output->grad);
    }
  }

  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] const std::vector<Record>& records() const { return records_; }

  /// Number of recorded invocations of `op`.
  [[nodiscard]] std::size_t count(std::string_view op) const {
    std::size_t n = 0;
    for (const auto& r : records_) n += (r.op == op);
    return n;
  }

  void clear() { records_.clear(); }

 private:
  bool grad_enabled_ = true;
  std::vector<Record> records_;
};

}  // namespace esr
