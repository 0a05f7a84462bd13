#pragma once

#include <functional>
#include <optional>

#include "robustbench/adversarial.hpp"

namespace robustbench {

/// Grid-then-bisect search over a scalar attack parameter. Scales are in
/// units of the bounds range (b_max - b_min).
struct ScalarSearchConfig {
  int grid_size = 100;
  int refine_steps = 20;
  double max_scale = 1.0;

  void validate() const;
  double grid_point(int k) const { return max_scale * static_cast<double>(k) / static_cast<double>(grid_size); }
  bool operator==(const ScalarSearchConfig&) const = default;
};

/// Returns true when some candidate produced for this parameter value was adversarial.
using ScalarProbe = std::function<bool(double)>;
using CandidateAt = std::function<Tensor(double)>;

/// Probes grid points in increasing order; at the first success, bisects
/// [previous grid point, hit] refine_steps times. Returns the smallest
/// successful value, or nothing when no grid point succeeds.
std::optional<double> search_minimal_scalar(const ScalarProbe& probe, const ScalarSearchConfig& config);

/// Bisection without bracket checks: `probe(hi)` is assumed true and
/// `probe(lo)` false. Returns the final upper end.
double bisect_minimal_scalar(const ScalarProbe& probe, double lo, double hi, int steps);

/// search_minimal_scalar where each probe is one try_candidate call.
std::optional<double> line_search_minimal_epsilon(AdversarialState& state, const CandidateAt& candidate_at,
                                                  const ScalarSearchConfig& config);

/// Checks the bracket (InvalidBracket otherwise) and bisects it.
double binary_search_refine(AdversarialState& state, double lo, double hi, const CandidateAt& candidate_at,
                            int steps);

}  // namespace robustbench
