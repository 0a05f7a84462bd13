#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robustbench/adversarial.hpp"
#include "robustbench/rng.hpp"
#include "robustbench/tuning.hpp"

namespace robustbench {

struct DecisionAttackConfig {
  int boundary_iterations = 5000;
  double boundary_spherical_step = 0.01;
  double boundary_source_step = 0.01;
  double boundary_step_adaptation = 1.5;
  /// Random uniform draws tried when looking for a starting adversarial.
  int boundary_init_trials = 1000;
  /// Optional adversarial starting image (e.g. a target-class image).
  std::optional<Tensor> starting_point;
  ScalarSearchConfig noise_search;
  double blur_sigma_max = 5.0;
  int pointwise_rounds = 10;
  int salt_and_pepper_repetitions = 10;

  void validate() const;
};

enum class NoiseDistribution { Uniform, Gaussian };

/// Random walk along the decision boundary: an orthogonal step on the sphere
/// around x0, then a contraction towards x0, accepted only if the result is
/// still adversarial. Step sizes adapt to the acceptance rates.
AttackOutcome boundary_attack(AdversarialState& state, const DecisionAttackConfig& config, Rng& rng);

/// Starts from salt-and-pepper noise (or the state's current best) and
/// greedily resets perturbed elements to their original values.
AttackOutcome pointwise_attack(AdversarialState& state, const DecisionAttackConfig& config, Rng& rng);

AttackOutcome additive_noise_attack(AdversarialState& state, NoiseDistribution distribution,
                                    const DecisionAttackConfig& config, Rng& rng);

AttackOutcome salt_and_pepper_attack(AdversarialState& state, const DecisionAttackConfig& config, Rng& rng);

/// Blends x0 towards the mid-range constant image.
AttackOutcome contrast_reduction_attack(AdversarialState& state, const DecisionAttackConfig& config = {});

AttackOutcome gaussian_blur_attack(AdversarialState& state, const DecisionAttackConfig& config = {});

/// Separable Gaussian blur with per-axis standard deviation `sigma` in pixels.
/// The kernel is truncated at 3 sigma and renormalized; edges use
/// half-sample symmetric reflection. Channels are blurred independently.
Tensor gaussian_blur(const Tensor& image, const SpatialLayout& layout, double sigma);

/// Inputs paired with externally computed adversarial candidates.
class PrecomputedTable {
 public:
  PrecomputedTable() = default;
  explicit PrecomputedTable(std::vector<std::pair<Tensor, Tensor>> entries);

  /// Exact bitwise lookup.
  const Tensor* find(const Tensor& input) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<std::pair<Tensor, Tensor>> entries_;
};

/// Reads inputs.csv and candidates.csv (dataset CSV format, rows paired by
/// position) from a directory.
PrecomputedTable load_precomputed_table(const std::string& directory);

AttackOutcome precomputed_images_attack(AdversarialState& state, const PrecomputedTable& table);

}  // namespace robustbench
