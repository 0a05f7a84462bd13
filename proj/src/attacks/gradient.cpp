#include "robustbench/attacks/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "attacks/common.hpp"
#include "robustbench/box_lbfgs.hpp"

namespace robustbench {

namespace {

using detail::one_hot;
using detail::run_attack;

// Gradient queries for the targeted optimizers: either the model's own
// gradients or central differences built from counted predictions.
class GradientProvider {
 public:
  GradientProvider(AdversarialState& state, GradientSource source, double step) : state_(state) {
    if (source == GradientSource::Numerical) {
      numerical_ = std::make_shared<NumericalGradientModel>(std::make_shared<detail::StateQueryModel>(state), step);
    }
  }

  ForwardGradient forward_and_gradient(const Tensor& x, Label label) {
    return numerical_ ? numerical_->forward_and_gradient(x, label) : state_.forward_and_gradient(x, label);
  }

  Tensor loss_gradient(const Tensor& x, Label label) {
    return numerical_ ? numerical_->loss_gradient(x, label) : state_.loss_gradient(x, label);
  }

 private:
  AdversarialState& state_;
  std::shared_ptr<const Model> numerical_;
};

Tensor normalized_l2(const Tensor& g) {
  const double norm = l2_norm(g.values());
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorCode::GradientZero, "loss gradient vanishes");
  Tensor out = g;
  for (double& v : out.values()) v /= norm;
  return out;
}

Tensor sign_of(const Tensor& g) {
  Tensor out = g;
  bool any = false;
  for (double& v : out.values()) {
    v = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    any = any || v != 0.0;
  }
  if (!any) throw Error(ErrorCode::GradientZero, "loss gradient vanishes");
  return out;
}

Tensor step_from(const Tensor& x, double eps, double range, const Tensor& direction) {
  return axpy(x, eps * range, direction);
}

// Line search along a fixed direction from x0; returns the candidate at the minimal epsilon.
std::optional<Tensor> directional_search(AdversarialState& state, const Tensor& direction,
                                         const ScalarSearchConfig& search, TunedParameters& tuned) {
  const Tensor& x0 = state.original();
  const double range = state.bounds().range();
  auto candidate_at = [&](double eps) { return step_from(x0, eps, range, direction); };
  const auto eps = line_search_minimal_epsilon(state, candidate_at, search);
  if (!eps) return std::nullopt;
  tuned["epsilon"] = *eps;
  return clip(candidate_at(*eps), state.bounds());
}

std::size_t second_highest(std::span<const double> logits, std::size_t top) {
  std::size_t best = top == 0 ? 1 : 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != top && logits[i] > logits[best]) best = i;
  }
  return best;
}

// explicit target -> criterion target -> class reached by the gradient
// attack -> second-highest logit at x0.
Label resolve_target(AdversarialState& state, std::optional<Label> explicit_target, GradientProvider& gradients,
                     const GradientAttackConfig& config, TunedParameters& tuned) {
  const Label original = state.original_label();
  const std::size_t n = state.model().num_classes();
  if (n < 2) throw Error(ErrorCode::InvalidParameter, "targeted attacks need at least two classes");
  auto accept = [&](Label t, double source) {
    state.model().check_label(t);
    tuned["target"] = static_cast<double>(t.index);
    tuned["target_source"] = source;
    return t;
  };
  if (explicit_target) return accept(*explicit_target, 0);
  if (auto t = state.criterion().target()) return accept(*t, 1);

  Tensor g = gradients.loss_gradient(state.original(), original);
  if (l2_norm(g.values()) > 0.0) {
    TunedParameters scratch;
    if (auto candidate = directional_search(state, normalized_l2(g), config.search, scratch)) {
      const std::size_t cls = argmax(state.predictions(*candidate));
      if (cls != original.index) return accept(Label{cls}, 2);
    }
  }
  const auto logits = state.predictions(state.original());
  return accept(Label{second_highest(logits, original.index)}, 3);
}

std::vector<double> lower_bounds(const AdversarialState& state) {
  return std::vector<double>(state.original().size(), state.bounds().min);
}
std::vector<double> upper_bounds(const AdversarialState& state) {
  return std::vector<double>(state.original().size(), state.bounds().max);
}

}  // namespace

double LambdaGrid::at(int i) const {
  if (points == 1) return max;
  const double t = static_cast<double>(i) / static_cast<double>(points - 1);
  return std::exp(std::log(max) + t * (std::log(min) - std::log(max)));
}

void GradientAttackConfig::validate() const {
  search.validate();
  if (max_iterations < 1 || deepfool_max_iter < 1 || deepfool_candidate_classes < 1 || lbfgs_max_opt_iter < 1) {
    throw Error(ErrorCode::InvalidParameter, "iteration counts must be positive");
  }
  if (!(deepfool_overshoot >= 0.0)) throw Error(ErrorCode::InvalidParameter, "deepfool_overshoot must be >= 0");
  if (lbfgs_lambda_grid.points < 1 || !(lbfgs_lambda_grid.min > 0.0) ||
      !(lbfgs_lambda_grid.max >= lbfgs_lambda_grid.min)) {
    throw Error(ErrorCode::InvalidParameter, "lambda grid needs points >= 1 and 0 < min <= max");
  }
  if (jsma_max_perturbed_features < 0) throw Error(ErrorCode::InvalidParameter, "jsma budget must be >= 0");
  if (!(jsma_theta > 0.0 && jsma_theta <= 1.0)) throw Error(ErrorCode::InvalidParameter, "jsma_theta in (0, 1]");
  if (!(numerical_step > 0.0)) throw Error(ErrorCode::InvalidParameter, "numerical_step must be positive");
}

AttackOutcome gradient_attack(AdversarialState& state, const GradientAttackConfig& config) {
  config.validate();
  return run_attack(state, "gradient", [&](TunedParameters& tuned) {
    const Tensor direction = normalized_l2(state.loss_gradient(state.original(), state.original_label()));
    directional_search(state, direction, config.search, tuned);
  });
}

AttackOutcome gradient_sign_attack(AdversarialState& state, const GradientAttackConfig& config) {
  config.validate();
  return run_attack(state, "fgsm", [&](TunedParameters& tuned) {
    const Tensor direction = sign_of(state.loss_gradient(state.original(), state.original_label()));
    directional_search(state, direction, config.search, tuned);
  });
}

AttackOutcome iterative_gradient_attack(AdversarialState& state, DirectionMode mode,
                                        const GradientAttackConfig& config) {
  config.validate();
  const char* name = mode == DirectionMode::Sign ? "iterative_fgsm" : "iterative_gradient";
  return run_attack(state, name, [&](TunedParameters& tuned) {
    const Tensor& x0 = state.original();
    const Label label = state.original_label();
    const double range = state.bounds().range();
    auto direction = [&](const Tensor& g) { return mode == DirectionMode::Sign ? sign_of(g) : normalized_l2(g); };

    // Fails fast on a flat loss at x0 rather than on every probe.
    direction(state.loss_gradient(x0, label));

    auto probe = [&](double eps) {
      Tensor x = x0;
      for (int i = 0; i < config.max_iterations; ++i) {
        Tensor dir;
        try {
          dir = direction(state.loss_gradient(x, label));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::GradientZero) return false;
          throw;
        }
        x = clip(step_from(x, eps, range, dir), state.bounds());
        if (state.try_candidate(x).first) return true;
      }
      return false;
    };
    tuned["max_iterations"] = config.max_iterations;
    tuned["max_model_calls"] = static_cast<double>(config.search.grid_size) * config.max_iterations;
    if (auto eps = search_minimal_scalar(probe, config.search)) tuned["epsilon"] = *eps;
  });
}

AttackOutcome deepfool_attack(AdversarialState& state, DeepFoolNorm norm, const GradientAttackConfig& config) {
  config.validate();
  const char* name = norm == DeepFoolNorm::L2 ? "deepfool_l2" : "deepfool_linf";
  return run_attack(state, name, [&](TunedParameters& tuned) {
    const std::size_t n = state.model().num_classes();
    if (n < 2) throw Error(ErrorCode::InvalidParameter, "DeepFool needs at least two classes");
    const std::size_t original = state.original_label().index;
    const auto fixed_target = state.criterion().target();
    tuned["overshoot"] = config.deepfool_overshoot;

    Tensor x = state.original();
    for (int it = 0; it < config.deepfool_max_iter; ++it) {
      const auto logits = state.predictions(x);

      std::vector<std::size_t> candidates;
      if (fixed_target && fixed_target->index != original) {
        candidates.push_back(fixed_target->index);
      } else {
        for (std::size_t k = 0; k < n; ++k) {
          if (k != original) candidates.push_back(k);
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
        candidates.resize(std::min<std::size_t>(candidates.size(), config.deepfool_candidate_classes));
      }

      double best_ratio = std::numeric_limits<double>::infinity();
      Tensor best_w;
      double best_df = 0.0;
      double best_norm = 0.0;
      for (std::size_t k : candidates) {
        std::vector<double> weights = one_hot(n, k);
        weights[original] -= 1.0;
        Tensor w = state.backward(x, weights);
        const double wn = norm == DeepFoolNorm::L2 ? l2_norm(w.values()) : l1_norm(w.values());
        if (wn < 1e-12) continue;
        const double df = std::abs(logits[k] - logits[original]);
        const double ratio = df / wn;
        if (ratio < best_ratio) {
          best_ratio = ratio;
          best_w = std::move(w);
          best_df = df;
          best_norm = wn;
        }
      }
      if (!std::isfinite(best_ratio)) {
        throw Error(ErrorCode::DegenerateBoundary, "all class boundaries have vanishing gradients");
      }

      // A point exactly on the boundary would otherwise make no progress.
      const double df = std::max(best_df, 1e-10);
      const double factor = 1.0 + config.deepfool_overshoot;
      if (norm == DeepFoolNorm::L2) {
        const double scale = factor * df / (best_norm * best_norm);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += scale * best_w[i];
      } else {
        const double scale = factor * df / best_norm;
        for (std::size_t i = 0; i < x.size(); ++i) {
          x[i] += scale * (best_w[i] > 0.0 ? 1.0 : (best_w[i] < 0.0 ? -1.0 : 0.0));
        }
      }
      clip_inplace(x, state.bounds());
      tuned["iterations"] = it + 1;
      if (state.try_candidate(x).first) return;
    }
  });
}

AttackOutcome lbfgs_attack(AdversarialState& state, std::optional<Label> target, const GradientAttackConfig& config,
                           GradientSource source) {
  config.validate();
  const char* name = source == GradientSource::Numerical ? "approx_lbfgs" : "lbfgs";
  return run_attack(state, name, [&](TunedParameters& tuned) {
    GradientProvider gradients(state, source, config.numerical_step);
    const Label t = resolve_target(state, target, gradients, config, tuned);
    const Tensor& x0 = state.original();
    const double range = state.bounds().range();
    const auto lower = lower_bounds(state);
    const auto upper = upper_bounds(state);

    BoxLbfgsOptions options;
    options.max_iterations = config.lbfgs_max_opt_iter;
    options.gradient_tolerance = 1e-8;
    options.initial_step = 0.1 * range;

    auto run = [&](double lambda) {
      Tensor x = x0;
      auto objective = [&](std::span<const double> z, std::span<double> grad) {
        std::copy(z.begin(), z.end(), x.begin());
        const ForwardGradient fg = gradients.forward_and_gradient(x, t);
        double penalty = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
          const double r = (z[i] - x0[i]) / range;
          penalty += r * r;
          grad[i] = fg.gradient[i] + 2.0 * lambda * r / range;
        }
        return cross_entropy(fg.logits, t) + lambda * penalty;
      };
      bool adversarial = false;
      Tensor iterate = x0;
      auto on_iterate = [&](std::span<const double> z) {
        std::copy(z.begin(), z.end(), iterate.begin());
        adversarial = state.try_candidate(iterate).first || adversarial;
      };
      minimize_box(objective, x0.data(), lower, upper, options, on_iterate);
      return adversarial;
    };

    const LambdaGrid& grid = config.lbfgs_lambda_grid;
    int hit = -1;
    for (int i = 0; i < grid.points; ++i) {
      if (run(grid.at(i))) {
        hit = i;
        break;
      }
    }
    if (hit < 0) return;
    double log_adv = std::log(grid.at(hit));
    if (hit > 0) {
      double log_clean = std::log(grid.at(hit - 1));
      for (int s = 0; s < config.search.refine_steps; ++s) {
        const double mid = 0.5 * (log_adv + log_clean);
        if (run(std::exp(mid))) {
          log_adv = mid;
        } else {
          log_clean = mid;
        }
      }
    }
    tuned["lambda"] = std::exp(log_adv);
  });
}

AttackOutcome slsqp_attack(AdversarialState& state, std::optional<Label> target, const GradientAttackConfig& config) {
  config.validate();
  return run_attack(state, "slsqp", [&](TunedParameters& tuned) {
    GradientProvider gradients(state, GradientSource::Analytic, config.numerical_step);
    const Label t = resolve_target(state, target, gradients, config, tuned);
    const Tensor& x0 = state.original();
    const double range = state.bounds().range();
    const auto lower = lower_bounds(state);
    const auto upper = upper_bounds(state);
    constexpr double kResidualTolerance = 1e-4;
    constexpr int kMaxEscalations = 8;
    constexpr int kMaxOuter = 40;

    BoxLbfgsOptions options;
    options.max_iterations = config.lbfgs_max_opt_iter;
    options.initial_step = 0.1 * range;

    // Loss level for the equality constraint: just past p_target = 1/2, or
    // past the criterion's own probability threshold when it has one.
    double q = 0.5;
    if (const auto* c = std::get_if<criteria::TargetClassProbability>(&state.criterion().variant())) {
      q = std::max(q, c->p);
    }
    q += 0.01 * (1.0 - q);

    for (int attempt = 0; attempt < 4; ++attempt) {
      const double level = -std::log(q);
      double multiplier = 0.0;
      double penalty = 1.0;
      int escalations = 0;
      double residual = std::numeric_limits<double>::infinity();
      double previous = residual;
      int outer = 0;
      Tensor x = x0;
      Tensor scratch = x0;

      auto objective = [&](std::span<const double> z, std::span<double> grad) {
        std::copy(z.begin(), z.end(), scratch.begin());
        const ForwardGradient fg = gradients.forward_and_gradient(scratch, t);
        const double c = cross_entropy(fg.logits, t) - level;
        const double weight = multiplier + penalty * c;
        double dist = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
          const double r = (z[i] - x0[i]) / range;
          dist += r * r;
          grad[i] = 2.0 * r / range + weight * fg.gradient[i];
        }
        return dist + multiplier * c + 0.5 * penalty * c * c;
      };
      Tensor iterate = x0;
      auto on_iterate = [&](std::span<const double> z) {
        std::copy(z.begin(), z.end(), iterate.begin());
        state.try_candidate(iterate);
      };

      for (outer = 0; outer < kMaxOuter; ++outer) {
        auto result = minimize_box(objective, x.data(), lower, upper, options, on_iterate);
        std::copy(result.x.begin(), result.x.end(), x.begin());
        const double c = cross_entropy(state.predictions(x), t) - level;
        residual = std::abs(c);
        if (residual <= kResidualTolerance) break;
        multiplier += penalty * c;
        if (residual > 0.25 * previous) {
          if (escalations == kMaxEscalations) break;
          penalty *= 10.0;
          ++escalations;
        }
        previous = residual;
      }

      tuned["target_probability"] = q;
      tuned["constraint_residual"] = residual;
      tuned["penalty"] = penalty;
      tuned["multiplier"] = multiplier;
      tuned["outer_iterations"] = outer + 1;
      if (state.try_candidate(x).first) return;
      q = 1.0 - 0.25 * (1.0 - q);
    }
  });
}

AttackOutcome saliency_map_attack(AdversarialState& state, std::optional<Label> target,
                                  const GradientAttackConfig& config) {
  config.validate();
  return run_attack(state, "jsma", [&](TunedParameters& tuned) {
    GradientProvider gradients(state, GradientSource::Analytic, config.numerical_step);
    const Label t = resolve_target(state, target, gradients, config, tuned);
    const std::size_t n = state.model().num_classes();
    const Tensor& x0 = state.original();
    const Bounds bounds = state.bounds();
    const std::size_t dim = x0.size();
    const std::size_t budget =
        config.jsma_max_perturbed_features > 0 ? static_cast<std::size_t>(config.jsma_max_perturbed_features) : dim;
    const double step = config.jsma_theta * bounds.range();
    const auto max_steps = budget * static_cast<std::size_t>(std::ceil(1.0 / config.jsma_theta) + 1);

    const std::vector<double> target_weights = one_hot(n, t.index);
    std::vector<double> other_weights(n, 1.0);
    other_weights[t.index] = 0.0;

    tuned["theta"] = config.jsma_theta;
    tuned["max_perturbed_features"] = static_cast<double>(budget);

    for (const bool increasing : {true, false}) {
      Tensor x = x0;
      std::set<std::size_t> touched;
      for (std::size_t iteration = 0; iteration < max_steps; ++iteration) {
        const Tensor alpha = state.backward(x, target_weights);
        const Tensor beta = state.backward(x, other_weights);
        double best_score = 0.0;
        std::size_t best = dim;
        for (std::size_t i = 0; i < dim; ++i) {
          const bool saturated = increasing ? x[i] >= bounds.max : x[i] <= bounds.min;
          if (saturated) continue;
          if (touched.size() >= budget && !touched.contains(i)) continue;
          double score = 0.0;
          if (increasing && alpha[i] > 0.0 && beta[i] < 0.0) score = alpha[i] * std::abs(beta[i]);
          if (!increasing && alpha[i] < 0.0 && beta[i] > 0.0) score = std::abs(alpha[i]) * beta[i];
          if (score > best_score) {
            best_score = score;
            best = i;
          }
        }
        if (best == dim) break;
        x[best] = std::clamp(x[best] + (increasing ? step : -step), bounds.min, bounds.max);
        touched.insert(best);
        if (state.try_candidate(x).first) {
          tuned[increasing ? "increasing_features" : "decreasing_features"] = static_cast<double>(touched.size());
          break;
        }
      }
    }
  });
}

}  // namespace robustbench
