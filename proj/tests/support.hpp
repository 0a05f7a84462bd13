// Shared fixtures for the unit and acceptance tests: small models, counting
// and decision-only wrappers, and independent oracles written without the
// library's helpers.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "robustbench/adversarial.hpp"
#include "robustbench/model.hpp"
#include "robustbench/rng.hpp"

namespace rbtest {

using namespace robustbench;

inline std::shared_ptr<const LinearSoftmaxModel> linear(const std::vector<std::vector<double>>& rows,
                                                        std::vector<double> biases, Bounds bounds = {0.0, 1.0},
                                                        Shape shape = {}) {
  return std::make_shared<LinearSoftmaxModel>(Matrix::from_rows(rows), std::move(biases), bounds, std::move(shape));
}

// Plain loops so the tests do not lean on the code under test.
inline std::vector<double> ref_logits(const LinearSoftmaxModel& m, const Tensor& x) {
  std::vector<double> out(m.num_classes());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = m.biases()[k];
    for (std::size_t i = 0; i < x.size(); ++i) acc += m.weights()(k, i) * x[i];
    out[k] = acc;
  }
  return out;
}

inline std::vector<double> ref_softmax(const std::vector<double>& z) {
  double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= s;
  return p;
}

inline double ref_l2(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double ref_distance(DistanceMeasure m, const Tensor& x, const Tensor& y, Bounds b) {
  const double r = b.max - b.min;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::fabs(x[i] / r - y[i] / r);
    switch (m) {
      case DistanceMeasure::MeanSquared: acc += d * d; break;
      case DistanceMeasure::MeanAbsolute: acc += d; break;
      case DistanceMeasure::Linf: acc = std::max(acc, d); break;
      case DistanceMeasure::L0: acc += (x[i] != y[i]) ? 1.0 : 0.0; break;
    }
  }
  if (m == DistanceMeasure::MeanSquared || m == DistanceMeasure::MeanAbsolute) acc /= static_cast<double>(x.size());
  return acc;
}

inline std::size_t ref_argmax(const std::vector<double>& z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

// A random linear classifier with a known nearest boundary. Class 0 is the
// label; class 1 has L2 margin `margin`, every other class at least 3x that
// and a logit at least 10 below class 1, so the softmax is dominated by the
// two classes sharing the nearest boundary. x0 sits far enough inside [0, 1]
// that the projection never clips.
struct LinearProblem {
  std::shared_ptr<const LinearSoftmaxModel> model;
  Tensor x0;
  Label label{0};
  Label nearest{1};
  double margin = 0.0;
};

inline LinearProblem random_linear_problem(Rng& rng, std::size_t classes, std::size_t dim, double margin) {
  std::vector<double> x(dim);
  for (double& v : x) v = rng.uniform(0.4, 0.6);
  const double scale = 60.0 / std::sqrt(static_cast<double>(dim));
  std::vector<std::vector<double>> w(classes, std::vector<double>(dim));
  for (auto& row : w) {
    for (double& v : row) v = scale * rng.normal();
  }
  std::vector<double> b(classes, 0.0);
  double nearest_gap = 0.0;
  for (std::size_t k = 1; k < classes; ++k) {
    double norm = 0.0;
    double f0_minus_fk = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      norm += (w[k][i] - w[0][i]) * (w[k][i] - w[0][i]);
      f0_minus_fk += (w[0][i] - w[k][i]) * x[i];
    }
    norm = std::sqrt(norm);
    double want = (k == 1 ? margin : margin * rng.uniform(3.0, 6.0)) * norm;
    if (k == 1) nearest_gap = want;
    want = std::max(want, nearest_gap + 10.0 * static_cast<double>(k > 1));
    b[k] = f0_minus_fk - want;
  }
  LinearProblem p;
  p.model = linear(w, b);
  p.x0 = Tensor(x);
  p.margin = margin;
  return p;
}

// L2 distance from x0 to the region where class 0 loses, by brute force
// over the halfspaces f_k > f_0.
inline double ref_l2_margin(const LinearSoftmaxModel& m, const Tensor& x0, std::size_t label) {
  const auto z = ref_logits(m, x0);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (k == label) continue;
    double norm = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double d = m.weights()(k, i) - m.weights()(label, i);
      norm += d * d;
    }
    best = std::min(best, (z[label] - z[k]) / std::sqrt(norm));
  }
  return best;
}

// Smallest eps with x0 + eps * dir leaving class `label` (no clipping).
inline double ref_crossing_along(const LinearSoftmaxModel& m, const Tensor& x0, std::size_t label,
                                 const std::vector<double>& dir) {
  const auto z = ref_logits(m, x0);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (k == label) continue;
    double rate = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) rate += (m.weights()(k, i) - m.weights()(label, i)) * dir[i];
    if (rate > 0.0) best = std::min(best, (z[label] - z[k]) / rate);
  }
  return best;
}

// Analytic cross-entropy gradient of a linear model, written out directly.
inline std::vector<double> ref_linear_loss_gradient(const LinearSoftmaxModel& m, const Tensor& x, std::size_t label) {
  // sum_{k != label} p_k (w_k - w_label): no cancellation when p_label ~ 1.
  const auto p = ref_softmax(ref_logits(m, x));
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k == label) continue;
    for (std::size_t i = 0; i < x.size(); ++i) g[i] += p[k] * (m.weights()(k, i) - m.weights()(label, i));
  }
  return g;
}

inline std::shared_ptr<const MlpModel> random_mlp(Rng& rng, std::size_t in, std::size_t hidden, std::size_t classes,
                                                  Bounds bounds = {0.0, 1.0}, Shape shape = {}) {
  auto layer = [&](std::size_t out, std::size_t inp, Activation act, double scale) {
    DenseLayer l;
    l.weights = Matrix(out, inp);
    for (double& v : l.weights.data) v = scale * rng.normal();
    l.biases.resize(out);
    for (double& v : l.biases) v = 0.5 * rng.normal();
    l.activation = act;
    return l;
  };
  std::vector<DenseLayer> layers;
  layers.push_back(layer(hidden, in, Activation::Relu, 3.0 / std::sqrt(static_cast<double>(in))));
  layers.push_back(layer(classes, hidden, Activation::Identity, 3.0 / std::sqrt(static_cast<double>(hidden))));
  return std::make_shared<MlpModel>(std::move(layers), bounds, std::move(shape));
}

// Counts every call made to the wrapped model.
class CountingModel final : public Model {
 public:
  explicit CountingModel(ModelPtr inner) : inner_(std::move(inner)) {}
  std::size_t num_classes() const override { return inner_->num_classes(); }
  Bounds bounds() const override { return inner_->bounds(); }
  const Shape& input_shape() const override { return inner_->input_shape(); }
  std::vector<double> logits(const Tensor& x) const override {
    ++forward_calls;
    return inner_->logits(x);
  }
  Tensor backward(const Tensor& x, std::span<const double> w) const override {
    ++gradient_calls;
    return inner_->backward(x, w);
  }
  Tensor loss_gradient(const Tensor& x, Label label) const override {
    ++gradient_calls;
    return inner_->loss_gradient(x, label);
  }
  ForwardGradient forward_and_gradient(const Tensor& x, Label label) const override {
    ++forward_calls;
    ++gradient_calls;
    return inner_->forward_and_gradient(x, label);
  }
  mutable std::atomic<std::uint64_t> forward_calls{0};
  mutable std::atomic<std::uint64_t> gradient_calls{0};

 private:
  ModelPtr inner_;
};

// Exposes only the decision: the logits become one-hot at the argmax.
class DecisionOnlyModel final : public Model {
 public:
  explicit DecisionOnlyModel(ModelPtr inner) : inner_(std::move(inner)) {}
  std::size_t num_classes() const override { return inner_->num_classes(); }
  Bounds bounds() const override { return inner_->bounds(); }
  const Shape& input_shape() const override { return inner_->input_shape(); }
  std::vector<double> logits(const Tensor& x) const override {
    const auto z = inner_->logits(x);
    std::vector<double> out(z.size(), 0.0);
    out[ref_argmax(z)] = 1.0;
    return out;
  }

 private:
  ModelPtr inner_;
};

// Two-class model: class 1 iff the predicate holds.
class PredicateModel final : public Model {
 public:
  PredicateModel(std::function<bool(const Tensor&)> pred, Shape shape, Bounds bounds = {0.0, 1.0})
      : pred_(std::move(pred)), shape_(std::move(shape)), bounds_(bounds) {}
  std::size_t num_classes() const override { return 2; }
  Bounds bounds() const override { return bounds_; }
  const Shape& input_shape() const override { return shape_; }
  std::vector<double> logits(const Tensor& x) const override {
    check_input(x);
    return pred_(x) ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
  }

 private:
  std::function<bool(const Tensor&)> pred_;
  Shape shape_;
  Bounds bounds_;
};

// Checks an outcome against an independent recomputation. Returns an empty
// string when everything holds.
inline std::string verify_outcome(const AdversarialState& state, const AttackOutcome& o) {
  if (!o.success) return {};
  if (!o.adversarial) return "success without an adversarial";
  const Tensor& x = *o.adversarial;
  const Bounds b = state.bounds();
  for (double v : x) {
    if (v < b.min || v > b.max) return "candidate out of bounds";
  }
  if (!state.criterion().is_adversarial(state.model().logits(x), state.original_label())) {
    return "candidate does not satisfy the criterion";
  }
  const double d = ref_distance(state.measure(), state.original(), x, b);
  if (std::fabs(d - o.distance.value) > 1e-12) return "distance mismatch";
  return {};
}

inline bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) return false;
  }
  return true;
}

}  // namespace rbtest
