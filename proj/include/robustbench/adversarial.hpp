#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "robustbench/criteria.hpp"
#include "robustbench/distances.hpp"
#include "robustbench/model.hpp"

namespace robustbench {

struct Evaluation {
  std::vector<double> logits;
  bool is_adversarial = false;
  DistanceValue distance;
};

/// Bookkeeping for one attack problem: which model, criterion and distance
/// measure are in use, the reference input and label, and the best
/// adversarial found so far. All model queries made by attacks go through
/// this object so they are counted.
///
/// Besides the overall best, the state keeps a per-run best that is reset by
/// begin_run(). The benchmark runs several attacks on one state in sequence;
/// the overall best is then the minimum over the per-run bests.
class AdversarialState {
 public:
  /// Throws AlreadyAdversarial when x0 already satisfies the criterion. The
  /// check does not count towards the query counters.
  AdversarialState(ModelPtr model, Criterion criterion, DistanceMeasure measure, Tensor original,
                   Label original_label);

  const Model& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const Criterion& criterion() const { return criterion_; }
  DistanceMeasure measure() const { return measure_; }
  const Tensor& original() const { return original_; }
  Label original_label() const { return original_label_; }
  Bounds bounds() const { return bounds_; }

  const std::optional<Tensor>& best_input() const { return best_input_; }
  DistanceValue best_distance() const { return best_distance_; }

  const std::optional<Tensor>& run_best_input() const { return run_best_input_; }
  DistanceValue run_best_distance() const { return run_best_distance_; }
  void begin_run();

  std::uint64_t prediction_calls() const { return prediction_calls_; }
  std::uint64_t gradient_calls() const { return gradient_calls_; }

  /// Clips x, queries the model once and updates the best on improvement.
  Evaluation evaluate(const Tensor& x);
  std::pair<bool, DistanceValue> try_candidate(const Tensor& x);

  /// Counted model queries with no effect on the best.
  std::vector<double> predictions(const Tensor& x);
  Tensor loss_gradient(const Tensor& x, Label label);
  Tensor backward(const Tensor& x, std::span<const double> weights);
  ForwardGradient forward_and_gradient(const Tensor& x, Label label);

  bool is_adversarial(std::span<const double> logits) const {
    return criterion_.is_adversarial(logits, original_label_);
  }
  DistanceValue distance_to_original(const Tensor& x) const { return distance(measure_, original_, x, bounds_); }

  /// Records best_distance after every evaluation when enabled.
  void enable_trace(bool on) { trace_enabled_ = on; }
  const std::vector<double>& trace() const { return trace_; }

 private:
  ModelPtr model_;
  Criterion criterion_;
  DistanceMeasure measure_;
  Tensor original_;
  Label original_label_;
  Bounds bounds_;

  std::optional<Tensor> best_input_;
  DistanceValue best_distance_;
  std::optional<Tensor> run_best_input_;
  DistanceValue run_best_distance_;

  std::uint64_t prediction_calls_ = 0;
  std::uint64_t gradient_calls_ = 0;

  bool trace_enabled_ = false;
  std::vector<double> trace_;
};

AdversarialState new_adversarial(ModelPtr model, Criterion criterion, DistanceMeasure measure, Tensor original,
                                 Label original_label);

using TunedParameters = std::map<std::string, double>;

/// Result of running one attack on a state.
struct AttackOutcome {
  std::string attack_name;
  bool success = false;
  /// Best distance found by this run (Infinity on failure).
  DistanceValue distance;
  std::optional<Tensor> adversarial;
  /// Overall best held by the state after the run.
  DistanceValue state_best_distance;
  TunedParameters tuned_parameters;
  std::uint64_t prediction_calls = 0;
  std::uint64_t gradient_calls = 0;
  double wall_time = 0.0;
  /// Error code name when the attack did not succeed.
  std::string error;
};

}  // namespace robustbench
