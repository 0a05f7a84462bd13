#pragma once

#include <compare>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "robustbench/tensor.hpp"

namespace robustbench {

enum class DistanceMeasure { MeanSquared, MeanAbsolute, Linf, L0 };

/// "mse", "mae", "linf", "l0".
std::string_view to_string(DistanceMeasure measure);
std::optional<DistanceMeasure> parse_distance(std::string_view name);

/// Size of a perturbation after dividing by the bounds range. Infinity means
/// that no adversarial has been found.
struct DistanceValue {
  double value = std::numeric_limits<double>::infinity();
  DistanceMeasure measure = DistanceMeasure::MeanSquared;

  static DistanceValue infinity(DistanceMeasure m) { return {std::numeric_limits<double>::infinity(), m}; }

  bool is_finite() const noexcept { return value < std::numeric_limits<double>::infinity(); }

  friend std::partial_ordering operator<=>(const DistanceValue& a, const DistanceValue& b) {
    return a.value <=> b.value;
  }
  friend bool operator==(const DistanceValue& a, const DistanceValue& b) { return a.value == b.value; }
};

/// L0 counts exactly-unequal elements (no 1/N); the other measures use
/// x / (b_max - b_min).
DistanceValue distance(DistanceMeasure measure, const Tensor& x, const Tensor& y, const Bounds& bounds);

}  // namespace robustbench
