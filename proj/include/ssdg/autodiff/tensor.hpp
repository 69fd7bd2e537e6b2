#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ssdg::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major buffer of doubles with an optional gradient of the same size.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor({}, std::vector<double>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Value of a one-element tensor.
  double item() const;

  bool has_gradient() const noexcept { return gradient_.size() == values_.size(); }
  /// Gradient buffer, allocated (zeroed) on first access.
  std::span<double> gradient();
  std::span<const double> gradient() const;
  void zero_gradient();
  void drop_gradient() noexcept { gradient_.clear(); }

  Tensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> gradient_;
};

}  // namespace ssdg::ad
