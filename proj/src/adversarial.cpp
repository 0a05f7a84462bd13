#include "robustbench/adversarial.hpp"

namespace robustbench {

AdversarialState::AdversarialState(ModelPtr model, Criterion criterion, DistanceMeasure measure, Tensor original,
                                   Label original_label)
    : model_(std::move(model)),
      criterion_(std::move(criterion)),
      measure_(measure),
      original_(std::move(original)),
      original_label_(original_label),
      best_distance_(DistanceValue::infinity(measure)),
      run_best_distance_(DistanceValue::infinity(measure)) {
  if (!model_) throw Error(ErrorCode::InvalidParameter, "adversarial state needs a model");
  model_->check_input(original_);
  model_->check_label(original_label_);
  bounds_ = model_->bounds();
  for (double v : original_) {
    if (!bounds_.contains(v)) throw Error(ErrorCode::InvalidParameter, "original input lies outside the model bounds");
  }
  if (criterion_.is_adversarial(model_->logits(original_), original_label_)) {
    throw Error(ErrorCode::AlreadyAdversarial, "original input already satisfies the criterion");
  }
}

void AdversarialState::begin_run() {
  run_best_input_.reset();
  run_best_distance_ = DistanceValue::infinity(measure_);
}

Evaluation AdversarialState::evaluate(const Tensor& x) {
  require_same_shape(original_, x, "candidate");
  Tensor clipped = clip(x, bounds_);
  Evaluation ev;
  ev.logits = model_->logits(clipped);
  ++prediction_calls_;
  ev.is_adversarial = is_adversarial(ev.logits);
  ev.distance = distance_to_original(clipped);
  if (ev.is_adversarial) {
    if (ev.distance < run_best_distance_) {
      run_best_distance_ = ev.distance;
      run_best_input_ = clipped;
    }
    if (ev.distance < best_distance_) {
      best_distance_ = ev.distance;
      best_input_ = std::move(clipped);
    }
  }
  if (trace_enabled_) trace_.push_back(best_distance_.value);
  return ev;
}

std::pair<bool, DistanceValue> AdversarialState::try_candidate(const Tensor& x) {
  Evaluation ev = evaluate(x);
  return {ev.is_adversarial, ev.distance};
}

std::vector<double> AdversarialState::predictions(const Tensor& x) {
  ++prediction_calls_;
  return model_->logits(x);
}

Tensor AdversarialState::loss_gradient(const Tensor& x, Label label) {
  ++gradient_calls_;
  return model_->loss_gradient(x, label);
}

Tensor AdversarialState::backward(const Tensor& x, std::span<const double> weights) {
  ++gradient_calls_;
  return model_->backward(x, weights);
}

ForwardGradient AdversarialState::forward_and_gradient(const Tensor& x, Label label) {
  ++prediction_calls_;
  ++gradient_calls_;
  return model_->forward_and_gradient(x, label);
}

AdversarialState new_adversarial(ModelPtr model, Criterion criterion, DistanceMeasure measure, Tensor original,
                                 Label original_label) {
  return AdversarialState(std::move(model), std::move(criterion), measure, std::move(original), original_label);
}

}  // namespace robustbench
