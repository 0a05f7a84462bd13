#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "robustbench/tensor.hpp"

namespace robustbench {

namespace criteria {

struct Misclassification {};
struct TopKMisclassification {
  std::size_t k = 1;
};
struct OriginalClassProbability {
  double p = 0.5;
};
struct TargetClass {
  Label target;
};
struct TargetClassProbability {
  Label target;
  double p = 0.5;
};

using Predicate = std::function<bool(std::span<const double> logits, Label original)>;

struct Custom {
  std::string name;
  Predicate predicate;
  std::optional<Label> target;
};

}  // namespace criteria

/// Decides whether an (input, label) pair counts as adversarial given the
/// model's logits. Probabilities are softmax(logits); the predicted class is
/// the argmax with ties going to the smallest index.
class Criterion {
 public:
  using Variant = std::variant<criteria::Misclassification, criteria::TopKMisclassification,
                               criteria::OriginalClassProbability, criteria::TargetClass,
                               criteria::TargetClassProbability, criteria::Custom>;

  Criterion() : variant_(criteria::Misclassification{}) {}

  static Criterion misclassification();
  static Criterion top_k(std::size_t k);
  static Criterion original_class_probability(double p);
  static Criterion target_class(Label target);
  static Criterion target_class_probability(Label target, double p);
  static Criterion custom(std::string name, criteria::Predicate predicate, std::optional<Label> target = {});

  bool is_adversarial(std::span<const double> logits, Label original) const;

  /// Target class for targeted criteria, empty otherwise.
  std::optional<Label> target() const;

  /// Config-file name ("misclassification", "top_k", ...).
  std::string name() const;

  const Variant& variant() const { return variant_; }

 private:
  explicit Criterion(Variant v) : variant_(std::move(v)) {}

  Variant variant_;
};

}  // namespace robustbench
