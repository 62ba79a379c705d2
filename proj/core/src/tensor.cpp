#include "ecgforge/tensor.hpp"

#include <cmath>
#include <numeric>
#include <utility>

namespace ecgforge {

std::int64_t shape_product(std::span<const std::int64_t> shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<std::int64_t> shape, bool requires_grad)
    : shape_(std::move(shape)), requires_grad_(requires_grad) {
  data_.assign(static_cast<std::size_t>(shape_product(shape_)), 0.0);
  if (requires_grad_) grad_.assign(data_.size(), 0.0);
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = value;
  return t;
}

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<double> values) {
  Tensor t;
  t.shape_ = std::move(shape);
  if (shape_product(t.shape_) != static_cast<std::int64_t>(values.size()))
    throw DimensionError("value count does not match shape");
  t.data_ = std::move(values);
  return t;
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on)
    grad_.assign(data_.size(), 0.0);
  else
    grad_.clear();
}

std::span<double> Tensor::grad() {
  if (!requires_grad_) throw StateError("tensor has no gradient buffer");
  return grad_;
}

std::span<const double> Tensor::grad() const {
  if (!requires_grad_) throw StateError("tensor has no gradient buffer");
  return grad_;
}

void Tensor::zero_grad() {
  for (double& g : grad_) g = 0.0;
}

std::int64_t Tensor::flat_index(std::initializer_list<std::int64_t> idx) const {
  if (idx.size() != shape_.size()) throw DimensionError("index rank mismatch");
  std::int64_t flat = 0;
  std::size_t k = 0;
  for (std::int64_t i : idx) {
    if (i < 0 || i >= shape_[k]) throw IndexError("tensor index out of range");
    flat = flat * shape_[k] + i;
    ++k;
  }
  return flat;
}

double& Tensor::at(std::initializer_list<std::int64_t> idx) {
  return data_[static_cast<std::size_t>(flat_index(idx))];
}

double Tensor::at(std::initializer_list<std::int64_t> idx) const {
  return data_[static_cast<std::size_t>(flat_index(idx))];
}

Tensor Tensor::reshaped(std::vector<std::int64_t> new_shape) const {
  if (shape_product(new_shape) != size())
    throw DimensionError("reshape must preserve element count");
  Tensor t;
  t.shape_ = std::move(new_shape);
  t.data_ = data_;
  return t;
}

void Tensor::reshape_inplace(std::vector<std::int64_t> new_shape) {
  if (shape_product(new_shape) != size())
    throw DimensionError("reshape must preserve element count");
  shape_ = std::move(new_shape);
}

void Tensor::resize(const std::vector<std::int64_t>& shape) {
  std::int64_t n = shape_product(shape);
  shape_ = shape;
  data_.resize(static_cast<std::size_t>(n));
  if (requires_grad_) grad_.resize(data_.size(), 0.0);
}

void Tensor::fill(double value) {
  for (double& v : data_) v = value;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace ecgforge
