// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "esr/autograd.hpp"

#include <span>
#include <string>

namespace esr {

/// Learnable tensor plus its optimizer state. Copies are deep: a copied
/// parameter owns a fresh graph node.
template <typename Scalar>
class Parameter {
 public:
  using Vector = typename Tensor<Scalar>::Vector;

  Parameter() = default;
  Parameter(std::string name, Tensor<Scalar> init)
      : name_(std::move(name)), node_(make_var(std::move(init), true)) {
    momentum_ = Vector::Zero(node_->value.size());
  }

  Parameter(const Parameter& other)
      : name_(other.name_),
        node_(std::make_shared<Node<Scalar>>(*other.node_)),
        momentum_(other.momentum_),
        lr_multiplier_(other.lr_multiplier_) {}
  Parameter& operator=(const Parameter& other) {
    if (this != &other) {
      Parameter tmp(other);
      *this = std::move(tmp);
    }
    return *this;
  }
  Parameter(Parameter&&) noexcept = default;
  Parameter& operator=(Parameter&&) noexcept = default;

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const Var<Scalar>& var() const { return node_; }
  Tensor<Scalar>& value() { return node_->value; }
  [[nodiscard]] const Tensor<Scalar>& value() const { return node_->value; }
  [[nodiscard]] const Tensor<Scalar>& grad() const { return node_->grad; }
  [[nodiscard]] bool has_grad() const { return node_->has_grad(); }
  Vector& momentum_buffer() { return momentum_; }
  [[nodiscard]] const Vector& momentum_buffer() const { return momentum_; }
  [[nodiscard]] Index size() const { return node_->value.size(); }

  [[nodiscard]] bool trainable() const { return lr_multiplier_ > Scalar(0); }
  [[nodiscard]] Scalar lr_multiplier() const { return lr_multiplier_; }

  /// A zero multiplier freezes the parameter and also stops the tape from
  /// computing its gradient.
  void set_lr_multiplier(Scalar multiplier);

  void zero_grad() { node_->zero_grad(); }

 private:
  std::string name_;
  Var<Scalar> node_;
  Vector momentum_;
  Scalar lr_multiplier_ = Scalar(1);
};

/// Heavy-ball SGD: buffer = momentum * buffer + grad;
/// value -= lr * lr_multiplier * buffer. Clears gradients afterwards.
/// Frozen parameters are skipped entirely. Throws NumericalFault on a
/// non-finite gradient before touching any value.
template <typename Scalar>
void sgd_momentum_step(std::span<Parameter<Scalar>* const> params, Scalar lr, Scalar momentum);

}  // namespace esr
