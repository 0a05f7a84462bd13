#include "robustbench/criteria.hpp"

#include <cmath>
#include <string>

#include "robustbench/model.hpp"

namespace robustbench {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidParameter, "probability threshold must lie in (0, 1)");
}

void check_label(Label label, std::size_t num_classes) {
  if (label.index >= num_classes) {
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label.index) + " out of range");
  }
}

// Number of classes ranked strictly before `label` under argmax ordering.
std::size_t rank_of(std::span<const double> logits, std::size_t label) {
  std::size_t rank = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] > logits[label] || (logits[i] == logits[label] && i < label)) ++rank;
  }
  return rank;
}

}  // namespace

Criterion Criterion::misclassification() { return Criterion(criteria::Misclassification{}); }

Criterion Criterion::top_k(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidParameter, "top_k requires k >= 1");
  return Criterion(criteria::TopKMisclassification{k});
}

Criterion Criterion::original_class_probability(double p) {
  check_probability(p);
  return Criterion(criteria::OriginalClassProbability{p});
}

Criterion Criterion::target_class(Label target) { return Criterion(criteria::TargetClass{target}); }

Criterion Criterion::target_class_probability(Label target, double p) {
  check_probability(p);
  return Criterion(criteria::TargetClassProbability{target, p});
}

Criterion Criterion::custom(std::string name, criteria::Predicate predicate, std::optional<Label> target) {
  if (!predicate) throw Error(ErrorCode::InvalidParameter, "custom criterion needs a predicate");
  return Criterion(criteria::Custom{std::move(name), std::move(predicate), target});
}

bool Criterion::is_adversarial(std::span<const double> logits, Label original) const {
  const std::size_t n = logits.size();
  check_label(original, n);
  return std::visit(
      overloaded{
          [&](const criteria::Misclassification&) { return argmax(logits) != original.index; },
          [&](const criteria::TopKMisclassification& c) {
            if (c.k >= n) throw Error(ErrorCode::InvalidParameter, "top_k requires k < num_classes");
            return rank_of(logits, original.index) >= c.k;
          },
          [&](const criteria::OriginalClassProbability& c) { return softmax(logits)[original.index] < c.p; },
          [&](const criteria::TargetClass& c) {
            check_label(c.target, n);
            return argmax(logits) == c.target.index;
          },
          [&](const criteria::TargetClassProbability& c) {
            check_label(c.target, n);
            return softmax(logits)[c.target.index] > c.p;
          },
          [&](const criteria::Custom& c) { return c.predicate(logits, original); },
      },
      variant_);
}

std::optional<Label> Criterion::target() const {
  return std::visit(overloaded{
                        [](const criteria::TargetClass& c) -> std::optional<Label> { return c.target; },
                        [](const criteria::TargetClassProbability& c) -> std::optional<Label> { return c.target; },
                        [](const criteria::Custom& c) { return c.target; },
                        [](const auto&) -> std::optional<Label> { return std::nullopt; },
                    },
                    variant_);
}

std::string Criterion::name() const {
  return std::visit(overloaded{
                        [](const criteria::Misclassification&) { return std::string("misclassification"); },
                        [](const criteria::TopKMisclassification&) { return std::string("top_k"); },
                        [](const criteria::OriginalClassProbability&) {
                          return std::string("original_class_probability");
                        },
                        [](const criteria::TargetClass&) { return std::string("target_class"); },
                        [](const criteria::TargetClassProbability&) {
                          return std::string("target_class_probability");
                        },
                        [](const criteria::Custom& c) { return c.name; },
                    },
                    variant_);
}

}  // namespace robustbench
