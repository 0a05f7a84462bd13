#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "robustbench/error.hpp"

namespace robustbench {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

/// Inclusive value range [min, max] accepted by a model.
struct Bounds {
  double min = 0.0;
  double max = 1.0;

  Bounds() = default;
  Bounds(double lo, double hi);

  double range() const noexcept { return max - min; }
  bool contains(double v) const noexcept { return v >= min && v <= max; }
  bool operator==(const Bounds&) const = default;
};

struct Label {
  std::size_t index = 0;

  auto operator<=>(const Label&) const = default;
};

/// Flat row-major array of doubles with a shape. All elements are finite.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<double> data, Shape shape);
  explicit Tensor(std::vector<double> data);  // 1-D
  Tensor(std::initializer_list<double> values);

  static Tensor zeros(const Shape& shape);
  static Tensor filled(const Shape& shape, double value);

  std::size_t size() const noexcept { return data_.size(); }
  const Shape& shape() const noexcept { return shape_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }

  /// Same data with a different shape; sizes must agree.
  Tensor reshaped(const Shape& shape) const;

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  /// Elementwise equality (numeric ==, so 0.0 == -0.0).
  bool operator==(const Tensor& other) const = default;

  /// Throws NonFinite if any element is NaN or infinite.
  void check_finite() const;

 private:
  std::vector<double> data_;
  Shape shape_;
};

/// Saturates every element into bounds; elements already in range are untouched.
Tensor clip(const Tensor& x, const Bounds& bounds);
void clip_inplace(Tensor& x, const Bounds& bounds);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
double l1_norm(std::span<const double> v);
double linf_norm(std::span<const double> v);

/// Returns a + scale * b.
Tensor axpy(const Tensor& a, double scale, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);

/// Spatial view of an image-like shape: [h, w] or [h, w, c].
struct SpatialLayout {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t pixels() const noexcept { return height * width; }
  std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const noexcept {
    return (row * width + col) * channels + ch;
  }
};

/// Throws NotSpatialInput for shapes that are not [h, w] or [h, w, c].
SpatialLayout spatial_layout(const Shape& shape);

}  // namespace robustbench
