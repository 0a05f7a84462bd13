#include "robustbench/distances.hpp"

#include <algorithm>
#include <cmath>

namespace robustbench {

std::string_view to_string(DistanceMeasure measure) {
  switch (measure) {
    case DistanceMeasure::MeanSquared: return "mse";
    case DistanceMeasure::MeanAbsolute: return "mae";
    case DistanceMeasure::Linf: return "linf";
    case DistanceMeasure::L0: return "l0";
  }
  return "mse";
}

std::optional<DistanceMeasure> parse_distance(std::string_view name) {
  if (name == "mse") return DistanceMeasure::MeanSquared;
  if (name == "mae") return DistanceMeasure::MeanAbsolute;
  if (name == "linf") return DistanceMeasure::Linf;
  if (name == "l0") return DistanceMeasure::L0;
  return std::nullopt;
}

DistanceValue distance(DistanceMeasure measure, const Tensor& x, const Tensor& y, const Bounds& bounds) {
  require_same_shape(x, y, "distance");
  const double scale = bounds.range();
  const auto n = static_cast<double>(x.size());
  double value = 0.0;
  switch (measure) {
    case DistanceMeasure::MeanSquared:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] / scale - y[i] / scale;
        value += d * d;
      }
      value /= n;
      break;
    case DistanceMeasure::MeanAbsolute:
      for (std::size_t i = 0; i < x.size(); ++i) value += std::abs(x[i] / scale - y[i] / scale);
      value /= n;
      break;
    case DistanceMeasure::Linf:
      for (std::size_t i = 0; i < x.size(); ++i) value = std::max(value, std::abs(x[i] / scale - y[i] / scale));
      break;
    case DistanceMeasure::L0:
      for (std::size_t i = 0; i < x.size(); ++i) value += (x[i] != y[i]) ? 1.0 : 0.0;
      break;
  }
  return {value, measure};
}

}  // namespace robustbench
