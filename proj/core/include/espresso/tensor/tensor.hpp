#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace espresso {

using Shape = std::vector<std::size_t>;

/// Raised when operand extents do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

enum class Precision { f64, f32 };

/// Dense row-major array of doubles. Every extent is positive and the flat
/// buffer always holds exactly product(shape) values.
///
/// 32-bit mode is emulated by rounding values through float; storage stays
/// 64-bit so one code path serves both precisions.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Same buffer under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  void fill(double value);
  void round_to(Precision precision);

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

/// Largest |a - b| / max(1, |b|) over all entries; shapes must match.
double max_relative_difference(const Tensor& a, const Tensor& b);

/// ||a - b||_2 / ||b||_2, or ||a||_2 when b is all zeros.
double relative_l2_difference(const Tensor& a, const Tensor& b);

}  // namespace espresso
