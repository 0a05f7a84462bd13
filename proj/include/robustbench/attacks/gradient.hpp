#pragma once

#include <optional>

#include "robustbench/adversarial.hpp"
#include "robustbench/tuning.hpp"

namespace robustbench {

/// Geometric grid of regularization weights, walked from the largest value down.
struct LambdaGrid {
  int points = 30;
  double min = 1e-3;
  double max = 1e3;

  double at(int i) const;  // i = 0 is the largest
  bool operator==(const LambdaGrid&) const = default;
};

struct GradientAttackConfig {
  ScalarSearchConfig search;
  int max_iterations = 100;
  int deepfool_max_iter = 50;
  double deepfool_overshoot = 0.02;
  int deepfool_candidate_classes = 10;
  LambdaGrid lbfgs_lambda_grid;
  int lbfgs_max_opt_iter = 150;
  /// 0 means the input dimension.
  int jsma_max_perturbed_features = 0;
  /// Per-feature step as a fraction of the bounds range.
  double jsma_theta = 0.1;
  /// Step for the finite-difference gradients of approximate L-BFGS.
  double numerical_step = 1e-5;

  void validate() const;
  bool operator==(const GradientAttackConfig&) const = default;
};

enum class DirectionMode { Raw, Sign };
enum class DeepFoolNorm { L2, Linf };
enum class GradientSource { Analytic, Numerical };

/// One gradient at x0, then the smallest step along g / ||g||_2.
AttackOutcome gradient_attack(AdversarialState& state, const GradientAttackConfig& config = {});

/// One gradient at x0, then the smallest step along sign(g).
AttackOutcome gradient_sign_attack(AdversarialState& state, const GradientAttackConfig& config = {});

/// Repeated steps of size epsilon (raw: along g / ||g||_2, sign: along
/// sign(g)), recomputing the gradient each step; epsilon is line-searched.
AttackOutcome iterative_gradient_attack(AdversarialState& state, DirectionMode mode,
                                        const GradientAttackConfig& config = {});

AttackOutcome deepfool_attack(AdversarialState& state, DeepFoolNorm norm, const GradientAttackConfig& config = {});

/// Minimizes L(x0 + rho, target) + lambda * ||rho / range||^2 over the box for
/// a descending lambda grid, then bisects log(lambda).
AttackOutcome lbfgs_attack(AdversarialState& state, std::optional<Label> target = {},
                           const GradientAttackConfig& config = {},
                           GradientSource source = GradientSource::Analytic);

/// Minimizes ||rho / range||^2 subject to L(x0 + rho, target) = l via an
/// augmented Lagrangian around the same box solver.
AttackOutcome slsqp_attack(AdversarialState& state, std::optional<Label> target = {},
                           const GradientAttackConfig& config = {});

/// Single-feature saliency map attack; tries the increasing and the
/// decreasing variant and keeps the best.
AttackOutcome saliency_map_attack(AdversarialState& state, std::optional<Label> target = {},
                                  const GradientAttackConfig& config = {});

}  // namespace robustbench
