#include "robustbench/tuning.hpp"

#include <cmath>

namespace robustbench {

void ScalarSearchConfig::validate() const {
  if (grid_size < 2) throw Error(ErrorCode::InvalidParameter, "grid_size must be >= 2");
  if (refine_steps < 0) throw Error(ErrorCode::InvalidParameter, "refine_steps must be >= 0");
  if (!(max_scale > 0.0) || !std::isfinite(max_scale)) {
    throw Error(ErrorCode::InvalidParameter, "max_scale must be positive");
  }
}

double bisect_minimal_scalar(const ScalarProbe& probe, double lo, double hi, int steps) {
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::optional<double> search_minimal_scalar(const ScalarProbe& probe, const ScalarSearchConfig& config) {
  config.validate();
  for (int k = 1; k <= config.grid_size; ++k) {
    const double eps = config.grid_point(k);
    if (probe(eps)) return bisect_minimal_scalar(probe, config.grid_point(k - 1), eps, config.refine_steps);
  }
  return std::nullopt;
}

std::optional<double> line_search_minimal_epsilon(AdversarialState& state, const CandidateAt& candidate_at,
                                                  const ScalarSearchConfig& config) {
  return search_minimal_scalar([&](double eps) { return state.try_candidate(candidate_at(eps)).first; }, config);
}

double binary_search_refine(AdversarialState& state, double lo, double hi, const CandidateAt& candidate_at,
                            int steps) {
  if (!(lo < hi) || steps < 0) throw Error(ErrorCode::InvalidBracket, "bracket needs lo < hi and steps >= 0");
  if (!state.try_candidate(candidate_at(hi)).first) {
    throw Error(ErrorCode::InvalidBracket, "upper end of the bracket is not adversarial");
  }
  if (state.try_candidate(candidate_at(lo)).first) {
    throw Error(ErrorCode::InvalidBracket, "lower end of the bracket is already adversarial");
  }
  return bisect_minimal_scalar([&](double eps) { return state.try_candidate(candidate_at(eps)).first; }, lo, hi,
                               steps);
}

}  // namespace robustbench
