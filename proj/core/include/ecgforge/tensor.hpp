#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge {

/// Dense n-dimensional array of doubles, row-major, with an optional
/// gradient buffer of the same length. Shapes are fixed at construction;
/// reshaped() returns a copy with a new shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape, bool requires_grad = false);

  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor full(std::vector<std::int64_t> shape, double value);
  static Tensor from(std::vector<std::int64_t> shape, std::vector<double> values);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::int64_t i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* raw() { return data_.data(); }
  const double* raw() const { return data_.data(); }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(std::initializer_list<std::int64_t> idx);
  double at(std::initializer_list<std::int64_t> idx) const;

  Tensor reshaped(std::vector<std::int64_t> new_shape) const;
  /// Changes the shape in place; the element count must be preserved.
  void reshape_inplace(std::vector<std::int64_t> new_shape);
  /// Adopts the given shape, reallocating only when the element count
  /// changes. Existing contents are not cleared; callers overwrite.
  void resize(const std::vector<std::int64_t>& shape);
  void fill(double value);

  bool all_finite() const;

 private:
  std::int64_t flat_index(std::initializer_list<std::int64_t> idx) const;

  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

std::int64_t shape_product(std::span<const std::int64_t> shape);

}  // namespace ecgforge
