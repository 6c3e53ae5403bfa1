#include "core/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "core/error.hpp"

namespace mimgan {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimension must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

Tensor::Tensor() : shape_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_to_string(shape_) + " needs " +
                     std::to_string(shape_size(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = value;
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_to_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() needs a one-element tensor, got " + shape_to_string(shape_));
  }
  return data_[0];
}

void Tensor::accumulate_grad(std::span<const double> delta) {
  if (delta.size() != data_.size()) {
    throw ShapeError("gradient length " + std::to_string(delta.size()) +
                     " does not match tensor " + shape_to_string(shape_));
  }
  if (grad_.empty()) grad_.assign(data_.size(), 0.0);
  for (std::size_t i = 0; i < delta.size(); ++i) grad_[i] += delta[i];
}

void Tensor::zero_grad() { grad_.assign(data_.size(), 0.0); }

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " +
                     shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

}  // namespace mimgan
