#include <cmath>

#include "../support.hpp"
#include "doctest.h"
#include "robustbench/distances.hpp"

using namespace rbtest;

TEST_CASE("mean squared distance by hand") {
  const double d = distance(DistanceMeasure::MeanSquared, Tensor{0, 0}, Tensor{2, 2}, Bounds(0, 255)).value;
  CHECK(std::fabs(d - (2.0 / 255) * (2.0 / 255)) <= 1e-12);
  CHECK(d == doctest::Approx(6.1515e-5).epsilon(1e-4));
}

TEST_CASE("zero for identical inputs") {
  for (auto m : {DistanceMeasure::MeanSquared, DistanceMeasure::MeanAbsolute, DistanceMeasure::Linf,
                 DistanceMeasure::L0}) {
    CHECK(distance(m, Tensor{0.1, 0.2, 0.3}, Tensor{0.1, 0.2, 0.3}, Bounds(0, 1)).value == 0.0);
  }
}

TEST_CASE("linf by hand") {
  const double d = distance(DistanceMeasure::Linf, Tensor{0, 10, 0}, Tensor{0, 0, 5}, Bounds(0, 255)).value;
  CHECK(std::fabs(d - 10.0 / 255) <= 1e-12);
  CHECK(d == doctest::Approx(0.039216).epsilon(1e-5));
}

TEST_CASE("l0 counts differing elements without normalization") {
  CHECK(distance(DistanceMeasure::L0, Tensor{1, 2, 3}, Tensor{1, 5, 3}, Bounds(0, 255)).value == 1.0);
  CHECK(distance(DistanceMeasure::L0, Tensor{1, 2, 3}, Tensor{0, 5, 4}, Bounds(0, 1000)).value == 3.0);
}

TEST_CASE("mean absolute distance by hand") {
  const double d = distance(DistanceMeasure::MeanAbsolute, Tensor{0, 0.5}, Tensor{1, 0}, Bounds(0, 2)).value;
  CHECK(std::fabs(d - (0.5 + 0.25) / 2) <= 1e-12);
}

TEST_CASE("shape mismatch") {
  CHECK_THROWS_AS(distance(DistanceMeasure::MeanSquared, Tensor{0, 0}, Tensor{0, 0, 0}, Bounds(0, 1)), Error);
}

TEST_CASE("distance properties") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(25);
    std::vector<double> x(n), y(n), xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform();
      y[i] = rng.coin() ? x[i] : rng.uniform();
      xs[i] = 255 * x[i];
      ys[i] = 255 * y[i];
    }
    const Tensor a(x), b(y);
    for (auto m : {DistanceMeasure::MeanSquared, DistanceMeasure::MeanAbsolute, DistanceMeasure::Linf,
                   DistanceMeasure::L0}) {
      const double d = distance(m, a, b, Bounds(0, 1)).value;
      CHECK(d == distance(m, b, a, Bounds(0, 1)).value);
      CHECK(d >= 0.0);
      CHECK(std::fabs(d - ref_distance(m, a, b, Bounds(0, 1))) <= 1e-12);
      CHECK(std::fabs(d - distance(m, Tensor(xs), Tensor(ys), Bounds(0, 255)).value) <= 1e-12);
      CHECK((d == 0.0) == (a == b));
    }
    CHECK(distance(DistanceMeasure::MeanSquared, a, b, Bounds(0, 1)).value <=
          distance(DistanceMeasure::MeanAbsolute, a, b, Bounds(0, 1)).value);
  }
}

TEST_CASE("distance values order with Infinity last") {
  const auto inf = DistanceValue::infinity(DistanceMeasure::MeanSquared);
  const DistanceValue small{0.3, DistanceMeasure::MeanSquared};
  CHECK(small < inf);
  CHECK_FALSE(inf.is_finite());
  CHECK(small.is_finite());
  CHECK(DistanceValue{0.1, DistanceMeasure::L0} < small);
}

TEST_CASE("config names") {
  CHECK(parse_distance("mse") == DistanceMeasure::MeanSquared);
  CHECK(parse_distance("mae") == DistanceMeasure::MeanAbsolute);
  CHECK(parse_distance("linf") == DistanceMeasure::Linf);
  CHECK(parse_distance("l0") == DistanceMeasure::L0);
  CHECK_FALSE(parse_distance("l2").has_value());
  CHECK(to_string(DistanceMeasure::Linf) == "linf");
}
