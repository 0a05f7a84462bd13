#pragma once

#include <functional>
#include <span>
#include <vector>

namespace robustbench {

struct BoxLbfgsOptions {
  int max_iterations = 150;
  /// Stop when the infinity norm of the projected gradient falls below this.
  double gradient_tolerance = 1e-8;
  int memory = 10;
  /// Largest coordinate move of the very first (steepest-descent) step.
  double initial_step = 0.1;
  int max_backtracks = 40;
};

struct BoxLbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Writes the gradient into `grad` and returns the objective value.
using BoxObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;
/// Called with every accepted iterate.
using IterateCallback = std::function<void(std::span<const double> x)>;

/// Limited-memory quasi-Newton minimization over the box [lower, upper].
///
/// Variables sitting on a bound with the gradient pointing outwards are held
/// fixed for the step; the two-loop direction is computed on the remaining
/// free variables and iterates are projected back onto the box, so every
/// point handed to the objective or the callback is feasible.
BoxLbfgsResult minimize_box(const BoxObjective& objective, std::vector<double> start,
                            std::span<const double> lower, std::span<const double> upper,
                            const BoxLbfgsOptions& options = {}, const IterateCallback& on_iterate = {});

}  // namespace robustbench
