#pragma once

#include <optional>

#include "robustbench/adversarial.hpp"
#include "robustbench/rng.hpp"

namespace robustbench {

struct ScoreAttackConfig {
  /// Chebyshev radius, in pixels, of the neighbourhood searched next.
  int ls_neighborhood = 5;
  int ls_rounds = 150;
  /// Magnitude of the extreme perturbation as a fraction of the range.
  double ls_p = 1.0;
  /// Pixels perturbed per round.
  int ls_top_t = 5;
  /// Fraction of pixels in the initial active set.
  double ls_initial_fraction = 0.1;

  void validate() const;
  bool operator==(const ScoreAttackConfig&) const = default;
};

/// Sets one pixel location (all channels) to b_max, then b_min, for every
/// pixel in a shuffled order. max_pixels limits how many locations are tried.
AttackOutcome single_pixel_attack(AdversarialState& state, Rng& rng, std::optional<std::size_t> max_pixels = {});

AttackOutcome local_search_attack(AdversarialState& state, const ScoreAttackConfig& config, Rng& rng);

}  // namespace robustbench
