// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/optim.hpp"

#include <stdexcept>

namespace esr {

template <typename Scalar>
void Parameter<Scalar>::set_lr_multiplier(Scalar multiplier) {
  if (!(multiplier >= Scalar(0))) {
    throw std::invalid_argument("parameter " + name_ + ": lr multiplier must be nonnegative");
  }
  lr_multiplier_ = multiplier;
  node_->requires_grad = multiplier > Scalar(0);
  if (!node_->requires_grad) node_->zero_grad();
}

template <typename Scalar>
void sgd_momentum_step(std::span<Parameter<Scalar>* const> params, Scalar lr, Scalar momentum) {
  for (const auto* p : params) {
    if (p->has_grad() && !p->grad().all_finite()) {
      throw NumericalFault("non-finite gradient in parameter " + p->name());
    }
  }
  for (auto* p : params) {
    if (!p->trainable()) {
      p->zero_grad();
      continue;
    }
    auto& buf = p->momentum_buffer();
    if (p->has_grad()) {
      buf = momentum * buf + p->grad().values();
    } else {
      buf *= momentum;
    }
    p->value().values() -= (lr * p->lr_multiplier()) * buf;
    p->zero_grad();
  }
}

template class Parameter<float>;
template class Parameter<double>;
template void sgd_momentum_step(std::span<Parameter<float>* const>, float, float);
template void sgd_momentum_step(std::span<Parameter<double>* const>, double, double);

}  // namespace esr
