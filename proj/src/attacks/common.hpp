#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "robustbench/adversarial.hpp"

namespace robustbench::detail {

/// Runs `body(tuned_parameters)` as one attack run on `state` and packages
/// the outcome. Throws AttackFailed when the run produced no adversarial.
template <typename Body>
AttackOutcome run_attack(AdversarialState& state, std::string name, Body&& body) {
  state.begin_run();
  const auto predictions_before = state.prediction_calls();
  const auto gradients_before = state.gradient_calls();
  const auto start = std::chrono::steady_clock::now();

  AttackOutcome out;
  out.attack_name = std::move(name);
  body(out.tuned_parameters);

  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.prediction_calls = state.prediction_calls() - predictions_before;
  out.gradient_calls = state.gradient_calls() - gradients_before;
  out.state_best_distance = state.best_distance();
  out.distance = state.run_best_distance();
  out.adversarial = state.run_best_input();
  out.success = out.adversarial.has_value();
  if (!out.success) throw Error(ErrorCode::AttackFailed, out.attack_name + " found no adversarial");
  return out;
}

/// Model view whose predictions are counted queries on a state. Used to run
/// finite-difference gradients through the state's bookkeeping.
class StateQueryModel final : public Model {
 public:
  explicit StateQueryModel(AdversarialState& state) : state_(&state) {}

  std::size_t num_classes() const override { return state_->model().num_classes(); }
  Bounds bounds() const override { return state_->bounds(); }
  const Shape& input_shape() const override { return state_->model().input_shape(); }
  std::vector<double> logits(const Tensor& x) const override { return state_->predictions(x); }

 private:
  AdversarialState* state_;
};

inline std::vector<double> one_hot(std::size_t n, std::size_t index, double value = 1.0) {
  std::vector<double> v(n, 0.0);
  v[index] = value;
  return v;
}

}  // namespace robustbench::detail
