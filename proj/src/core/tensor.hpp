#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mimgan {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient slot.
///
/// Every dimension is positive and the flat data length equals the product
/// of the shape. The gradient slot is empty until something accumulates into
/// it; once present it always has the same length as the data.
class Tensor {
 public:
  /// A one-element tensor holding 0.
  Tensor();
  /// Zero-filled tensor of the given shape.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor filled(Shape shape, double value);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  /// Value of a one-element tensor.
  double item() const;

  bool has_grad() const noexcept { return !grad_.empty(); }
  std::span<const double> grad() const noexcept { return grad_; }
  /// Adds `delta` into the gradient slot, creating it on first use.
  void accumulate_grad(std::span<const double> delta);
  /// Sets the gradient slot to zeros (creating it if absent).
  void zero_grad();
  /// Drops the gradient slot entirely.
  void clear_grad() noexcept { grad_.clear(); }

  bool all_finite() const noexcept;

  /// Same data viewed with another shape of equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
};

}  // namespace mimgan
