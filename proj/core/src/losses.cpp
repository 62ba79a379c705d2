#include "ecgforge/losses.hpp"

#include <cmath>
#include <string>

namespace ecgforge::nn {

namespace {
void check_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("loss: prediction/target shape mismatch");
  if (a.size() == 0) throw DimensionError("loss: empty tensors");
}
}  // namespace

double smooth_l1_loss(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target);
  const double n = static_cast<double>(prediction.size());
  double acc = 0.0;
  for (std::int64_t i = 0; i < prediction.size(); ++i) {
    double d = prediction[i] - target[i];
    double ad = std::fabs(d);
    acc += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
  }
  return acc / n;
}

LossValue smooth_l1_loss_with_grad(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target);
  const double n = static_cast<double>(prediction.size());
  LossValue out{0.0, Tensor(prediction.shape())};
  double acc = 0.0;
  for (std::int64_t i = 0; i < prediction.size(); ++i) {
    double d = prediction[i] - target[i];
    double ad = std::fabs(d);
    if (ad < 1.0) {
      acc += 0.5 * d * d;
      out.grad[i] = d / n;
    } else {
      acc += ad - 0.5;
      out.grad[i] = (d > 0.0 ? 1.0 : -1.0) / n;
    }
  }
  out.value = acc / n;
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("softmax: expected [batch, classes]");
  const std::int64_t batch = logits.dim(0);
  const std::int64_t classes = logits.dim(1);
  Tensor out(logits.shape());
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* row = logits.raw() + b * classes;
    double* o = out.raw() + b * classes;
    double mx = row[0];
    for (std::int64_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    if (!std::isfinite(mx)) throw NumericError("softmax: non-finite logit");
    double sum = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) {
      o[c] = std::exp(row[c] - mx);
      sum += o[c];
    }
    for (std::int64_t c = 0; c < classes; ++c) o[c] /= sum;
  }
  return out;
}

namespace {
void check_labels(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw DimensionError("cross_entropy: expected [batch, classes]");
  if (static_cast<std::int64_t>(labels.size()) != logits.dim(0))
    throw DimensionError("cross_entropy: label count != batch");
  for (int l : labels)
    if (l < 0 || l >= logits.dim(1))
      throw IndexError("cross_entropy: label " + std::to_string(l) + " out of range");
  for (std::int64_t i = 0; i < logits.size(); ++i)
    if (!std::isfinite(logits[i])) throw NumericError("cross_entropy: non-finite logit");
}
}  // namespace

double cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  const std::int64_t batch = logits.dim(0);
  const std::int64_t classes = logits.dim(1);
  double acc = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* row = logits.raw() + b * classes;
    double mx = row[0];
    for (std::int64_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
    acc += std::log(sum) - (row[labels[static_cast<std::size_t>(b)]] - mx);
  }
  return acc / static_cast<double>(batch);
}

LossValue cross_entropy_loss_with_grad(const Tensor& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  const std::int64_t batch = logits.dim(0);
  const std::int64_t classes = logits.dim(1);
  Tensor probs = softmax_rows(logits);
  LossValue out{0.0, Tensor(logits.shape())};
  double acc = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    const double* p = probs.raw() + b * classes;
    double* g = out.grad.raw() + b * classes;
    acc += -std::log(p[label]);
    for (std::int64_t c = 0; c < classes; ++c)
      g[c] = (p[c] - (c == label ? 1.0 : 0.0)) / static_cast<double>(batch);
  }
  out.value = acc / static_cast<double>(batch);
  return out;
}

}  // namespace ecgforge::nn
