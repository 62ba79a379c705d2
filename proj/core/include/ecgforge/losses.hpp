#pragma once

#include <span>

#include "ecgforge/tensor.hpp"

namespace ecgforge::nn {

struct LossValue {
  double value;
  Tensor grad;  // gradient with respect to the prediction / logits
};

/// Mean over elements of 0.5*d^2 for |d| < 1 and |d| - 0.5 otherwise,
/// d = prediction - target.
double smooth_l1_loss(const Tensor& prediction, const Tensor& target);
LossValue smooth_l1_loss_with_grad(const Tensor& prediction, const Tensor& target);

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& logits);

/// Mean over the batch of -log softmax(logits)[label].
double cross_entropy_loss(const Tensor& logits, std::span<const int> labels);
LossValue cross_entropy_loss_with_grad(const Tensor& logits, std::span<const int> labels);

}  // namespace ecgforge::nn
