#include <cmath>

#include "../support.hpp"
#include "doctest.h"
#include "robustbench/box_lbfgs.hpp"
#include "robustbench/tuning.hpp"

using namespace rbtest;

namespace {

// Adversarial iff x[0] > 0.5 (strictly); x0[0] = 0, so candidate_at(eps)
// = [eps, ...] is adversarial iff eps > 0.5.
std::shared_ptr<const LinearSoftmaxModel> step_model(double threshold) {
  return linear({{-1, 0}, {1, 0}}, {threshold, -threshold});
}

}  // namespace

TEST_CASE("synthetic threshold is found to 1e-6") {
  int calls = 0;
  const auto eps = search_minimal_scalar(
      [&](double e) {
        ++calls;
        return e >= 0.437;
      },
      ScalarSearchConfig{});
  REQUIRE(eps.has_value());
  CHECK(std::fabs(*eps - 0.437) < 1e-6);
  CHECK(*eps >= 0.437);
  // 44 grid probes to reach 0.44, then 20 bisection steps.
  CHECK(calls == 44 + 20);
}

TEST_CASE("never adversarial gives no result") {
  CHECK_FALSE(search_minimal_scalar([](double) { return false; }, ScalarSearchConfig{}).has_value());
}

TEST_CASE("hit at the first grid point bisects from zero") {
  std::vector<double> probes;
  const auto eps = search_minimal_scalar(
      [&](double e) {
        probes.push_back(e);
        return e >= 0.001;
      },
      ScalarSearchConfig{});
  REQUIRE(eps.has_value());
  CHECK(probes.front() == doctest::Approx(0.01));
  CHECK(probes[1] == doctest::Approx(0.005));
  CHECK(std::fabs(*eps - 0.001) <= 0.01 / std::ldexp(1.0, 20));
}

TEST_CASE("monotone predicate bound") {
  Rng rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    ScalarSearchConfig cfg;
    cfg.grid_size = 2 + static_cast<int>(rng.uniform_index(200));
    cfg.refine_steps = static_cast<int>(rng.uniform_index(25));
    cfg.max_scale = rng.uniform(0.1, 3.0);
    const double t = rng.uniform(0.0, cfg.max_scale * (1.0 - 1.0 / cfg.grid_size));
    const auto eps = search_minimal_scalar([&](double e) { return e >= t; }, cfg);
    REQUIRE(eps.has_value());
    CHECK(*eps >= t);
    CHECK(*eps <= t + cfg.max_scale / (cfg.grid_size * std::ldexp(1.0, cfg.refine_steps)) + 1e-15);
  }
}

TEST_CASE("config validation") {
  ScalarSearchConfig c;
  c.grid_size = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.refine_steps = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.max_scale = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("line search probes go through the state") {
  AdversarialState s(step_model(0.5), Criterion::misclassification(), DistanceMeasure::Linf, Tensor{0.0, 0.0},
                     Label{0});
  const auto eps = line_search_minimal_epsilon(s, [](double e) { return Tensor{e, 0.0}; }, ScalarSearchConfig{});
  REQUIRE(eps.has_value());
  CHECK(*eps > 0.5);
  CHECK(*eps - 0.5 <= 0.01 / std::ldexp(1.0, 20) + 1e-15);
  CHECK(s.prediction_calls() == 51 + 20);
  CHECK(s.best_distance().value == doctest::Approx(*eps));
}

TEST_CASE("binary search refine") {
  AdversarialState s(step_model(0.5), Criterion::misclassification(), DistanceMeasure::Linf, Tensor{0.0, 0.0},
                     Label{0});
  const auto at = [](double e) { return Tensor{e, 0.0}; };
  const double r = binary_search_refine(s, 0.0, 1.0, at, 20);
  CHECK(std::fabs(r - 0.5) <= std::ldexp(1.0, -20));
  CHECK(r > 0.5);
  CHECK(binary_search_refine(s, 0.0, 0.8, at, 0) == 0.8);
  CHECK(binary_search_refine(s, 0.2, 0.75, at, 5) <= 0.75);

  try {
    binary_search_refine(s, 0.0, 0.3, at, 10);
    FAIL("expected InvalidBracket");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidBracket);
  }
  try {
    binary_search_refine(s, 0.6, 0.9, at, 10);
    FAIL("expected InvalidBracket");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidBracket);
  }
}

TEST_CASE("box L-BFGS on a bound-constrained quadratic") {
  // f = sum (x_i - c_i)^2 with some c outside [0, 1]: solution clip(c).
  const std::vector<double> c = {-0.5, 0.3, 1.7, 0.9, 2.0};
  const std::vector<double> lo(5, 0.0), hi(5, 1.0);
  int callbacks = 0;
  bool feasible = true;
  const auto res = minimize_box(
      [&](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          feasible = feasible && x[i] >= 0.0 && x[i] <= 1.0;
          f += (x[i] - c[i]) * (x[i] - c[i]);
          g[i] = 2 * (x[i] - c[i]);
        }
        return f;
      },
      std::vector<double>(5, 0.5), lo, hi, {}, [&](std::span<const double>) { ++callbacks; });
  CHECK(feasible);
  CHECK(callbacks > 0);
  const std::vector<double> expected = {0.0, 0.3, 1.0, 0.9, 1.0};
  for (int i = 0; i < 5; ++i) CHECK(res.x[i] == doctest::Approx(expected[i]).epsilon(1e-7));
}

TEST_CASE("box L-BFGS on Rosenbrock inside a box") {
  const std::vector<double> lo = {-2, -2}, hi = {2, 2};
  BoxLbfgsOptions opt;
  opt.max_iterations = 500;
  const auto res = minimize_box(
      [](std::span<const double> x, std::span<double> g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2 * a - 400 * x[0] * b;
        g[1] = 200 * b;
        return a * a + 100 * b * b;
      },
      {-1.2, 1.0}, lo, hi, opt);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}
