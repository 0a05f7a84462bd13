#include "robustbench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace robustbench {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Bounds::Bounds(double lo, double hi) : min(lo), max(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw Error(ErrorCode::InvalidBounds,
                "bounds require min < max, got [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

Tensor::Tensor(std::vector<double> data, Shape shape) : data_(std::move(data)), shape_(std::move(shape)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw Error(ErrorCode::ShapeMismatch, "shape dimensions must be positive");
  }
  if (shape_.empty() || shape_size(shape_) != data_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "shape does not match data length " + std::to_string(data_.size()));
  }
  check_finite();
}

Tensor::Tensor(std::vector<double> data) : Tensor(data, Shape{data.size()}) {}

Tensor::Tensor(std::initializer_list<double> values) : Tensor(std::vector<double>(values)) {}

Tensor Tensor::zeros(const Shape& shape) { return filled(shape, 0.0); }

Tensor Tensor::filled(const Shape& shape, double value) {
  return Tensor(std::vector<double>(shape_size(shape), value), shape);
}

Tensor Tensor::reshaped(const Shape& shape) const { return Tensor(data_, shape); }

void Tensor::check_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "tensor contains NaN or Inf");
  }
}

Tensor clip(const Tensor& x, const Bounds& bounds) {
  Tensor out = x;
  clip_inplace(out, bounds);
  return out;
}

void clip_inplace(Tensor& x, const Bounds& bounds) {
  for (double& v : x.values()) {
    if (v < bounds.min) {
      v = bounds.min;
    } else if (v > bounds.max) {
      v = bounds.max;
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": tensor shapes differ");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += std::abs(e);
  return s;
}

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

Tensor axpy(const Tensor& a, double scale, const Tensor& b) {
  require_same_shape(a, b, "axpy");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) { return axpy(a, -1.0, b); }

SpatialLayout spatial_layout(const Shape& shape) {
  if (shape.size() == 2) return {shape[0], shape[1], 1};
  if (shape.size() == 3) return {shape[0], shape[1], shape[2]};
  throw Error(ErrorCode::NotSpatialInput, "attack needs an input of shape [h, w] or [h, w, c]");
}

}  // namespace robustbench
