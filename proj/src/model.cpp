#include "robustbench/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace robustbench {

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double cross_entropy(std::span<const double> logits, Label label) {
  if (label.index >= logits.size()) {
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label.index) + " out of range");
  }
  const std::size_t top = argmax(logits);
  const double m = logits[top];
  double rest = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != top) rest += std::exp(logits[i] - m);
  }
  return (m - logits[label.index]) + std::log1p(rest);
}

std::size_t argmax(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

void Model::check_input(const Tensor& x) const {
  if (x.shape() != input_shape()) {
    throw Error(ErrorCode::ShapeMismatch, "input shape does not match the model input shape");
  }
}

void Model::check_label(Label label) const {
  if (label.index >= num_classes()) {
    throw Error(ErrorCode::LabelOutOfRange,
                "label " + std::to_string(label.index) + " >= num_classes " + std::to_string(num_classes()));
  }
}

Tensor Model::backward(const Tensor&, std::span<const double>) const {
  throw Error(ErrorCode::GradientUnavailable, "model does not provide gradients");
}

Tensor Model::loss_gradient(const Tensor& x, Label label) const {
  check_label(label);
  std::vector<double> w = softmax(logits(x));
  // p_label - 1 rounds to 0 once the label dominates; use -sum of the rest.
  double rest = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k != label.index) rest += w[k];
  }
  w[label.index] = -rest;
  return backward(x, w);
}

ForwardGradient Model::forward_and_gradient(const Tensor& x, Label label) const {
  return {logits(x), loss_gradient(x, label)};
}

double Model::loss(const Tensor& x, Label label) const {
  check_label(label);
  return cross_entropy(logits(x), label);
}

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw Error(ErrorCode::DimensionMismatch, "matrix data length mismatch");
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw Error(ErrorCode::DimensionMismatch, "empty matrix");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) throw Error(ErrorCode::DimensionMismatch, "ragged matrix rows");
    std::copy(rows[r].begin(), rows[r].end(), m.data.begin() + static_cast<std::ptrdiff_t>(r * m.cols));
  }
  return m;
}

namespace {

void affine(const Matrix& w, const std::vector<double>& b, std::span<const double> in, std::vector<double>& out) {
  out.assign(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) out[r] = dot(w.row(r), in) + b[r];
}

// out = W^T v
void transpose_times(const Matrix& w, std::span<const double> v, std::vector<double>& out) {
  out.assign(w.cols, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double s = v[r];
    if (s == 0.0) continue;
    const auto row = w.row(r);
    for (std::size_t c = 0; c < w.cols; ++c) out[c] += s * row[c];
  }
}

void check_finite_params(const Matrix& w, const std::vector<double>& b) {
  for (double v : w.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite weight");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite bias");
  }
}

Shape default_shape(Shape shape, std::size_t dim) {
  if (shape.empty()) return {dim};
  if (shape_size(shape) != dim) {
    throw Error(ErrorCode::DimensionMismatch, "input_shape does not match first layer width");
  }
  return shape;
}

}  // namespace

LinearSoftmaxModel::LinearSoftmaxModel(Matrix weights, std::vector<double> biases, Bounds bounds, Shape input_shape)
    : weights_(std::move(weights)), biases_(std::move(biases)), bounds_(bounds) {
  if (weights_.rows == 0 || weights_.cols == 0) throw Error(ErrorCode::DimensionMismatch, "empty weight matrix");
  if (biases_.size() != weights_.rows) throw Error(ErrorCode::DimensionMismatch, "bias length != num_classes");
  check_finite_params(weights_, biases_);
  shape_ = default_shape(std::move(input_shape), weights_.cols);
}

std::vector<double> LinearSoftmaxModel::logits(const Tensor& x) const {
  check_input(x);
  std::vector<double> out;
  affine(weights_, biases_, x.values(), out);
  return out;
}

Tensor LinearSoftmaxModel::backward(const Tensor& x, std::span<const double> weights) const {
  check_input(x);
  if (weights.size() != num_classes()) throw Error(ErrorCode::DimensionMismatch, "backward weights length");
  std::vector<double> g;
  transpose_times(weights_, weights, g);
  return Tensor(std::move(g), shape_);
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, Bounds bounds, Shape input_shape)
    : layers_(std::move(layers)), bounds_(bounds) {
  if (layers_.empty()) throw Error(ErrorCode::DimensionMismatch, "MLP needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.weights.rows == 0 || layer.weights.cols == 0) {
      throw Error(ErrorCode::DimensionMismatch, "empty weight matrix in layer " + std::to_string(i));
    }
    if (layer.biases.size() != layer.weights.rows) {
      throw Error(ErrorCode::DimensionMismatch, "bias length mismatch in layer " + std::to_string(i));
    }
    if (i > 0 && layer.weights.cols != layers_[i - 1].weights.rows) {
      throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(i) + " does not chain");
    }
    check_finite_params(layer.weights, layer.biases);
  }
  shape_ = default_shape(std::move(input_shape), layers_.front().weights.cols);
}

std::vector<double> MlpModel::logits(const Tensor& x) const {
  check_input(x);
  std::vector<double> act(x.begin(), x.end());
  std::vector<double> next;
  for (const auto& layer : layers_) {
    affine(layer.weights, layer.biases, act, next);
    if (layer.activation == Activation::Relu) {
      for (double& v : next) v = std::max(v, 0.0);
    }
    act.swap(next);
  }
  return act;
}

Tensor MlpModel::backward(const Tensor& x, std::span<const double> weights) const {
  check_input(x);
  if (weights.size() != num_classes()) throw Error(ErrorCode::DimensionMismatch, "backward weights length");
  // Forward pass keeping pre-activations for the ReLU masks.
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
  inputs.reserve(layers_.size());
  pre.reserve(layers_.size());
  std::vector<double> act(x.begin(), x.end());
  for (const auto& layer : layers_) {
    inputs.push_back(act);
    std::vector<double> z;
    affine(layer.weights, layer.biases, act, z);
    pre.push_back(z);
    if (layer.activation == Activation::Relu) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    act = std::move(z);
  }
  std::vector<double> delta(weights.begin(), weights.end());
  std::vector<double> upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& layer = layers_[i];
    if (layer.activation == Activation::Relu) {
      // subgradient 0 at the kink
      for (std::size_t j = 0; j < delta.size(); ++j) {
        if (!(pre[i][j] > 0.0)) delta[j] = 0.0;
      }
    }
    transpose_times(layer.weights, delta, upstream);
    delta.swap(upstream);
  }
  return Tensor(std::move(delta), shape_);
}

CompositeModel::CompositeModel(ModelPtr forward_model, ModelPtr backward_model)
    : forward_(std::move(forward_model)), backward_(std::move(backward_model)) {
  if (!forward_ || !backward_) throw Error(ErrorCode::InvalidParameter, "composite model needs two models");
  if (forward_->num_classes() != backward_->num_classes() || forward_->bounds() != backward_->bounds() ||
      forward_->input_shape() != backward_->input_shape()) {
    throw Error(ErrorCode::DimensionMismatch, "composite submodels disagree on classes, bounds or shape");
  }
}

Tensor CompositeModel::backward(const Tensor& x, std::span<const double> weights) const {
  return backward_->backward(x, weights);
}

Tensor CompositeModel::loss_gradient(const Tensor& x, Label label) const {
  return backward_->loss_gradient(x, label);
}

ForwardGradient CompositeModel::forward_and_gradient(const Tensor& x, Label label) const {
  return {forward_->logits(x), backward_->loss_gradient(x, label)};
}

NumericalGradientModel::NumericalGradientModel(ModelPtr inner, double step) : inner_(std::move(inner)), step_(step) {
  if (!inner_) throw Error(ErrorCode::InvalidParameter, "numerical gradient model needs an inner model");
  if (!(step_ > 0.0)) throw Error(ErrorCode::InvalidParameter, "finite-difference step must be positive");
}

template <typename Scalar>
Tensor NumericalGradientModel::central_differences(const Tensor& x, Scalar&& scalar) const {
  check_input(x);
  const Bounds b = bounds();
  const double h = step_ * b.range();
  Tensor grad = Tensor::zeros(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double hi = std::min(x[i] + h, b.max);
    const double lo = std::max(x[i] - h, b.min);
    probe[i] = hi;
    const double f_hi = scalar(probe);
    probe[i] = lo;
    const double f_lo = scalar(probe);
    probe[i] = x[i];
    grad[i] = (f_hi - f_lo) / (hi - lo);
  }
  return grad;
}

Tensor NumericalGradientModel::backward(const Tensor& x, std::span<const double> weights) const {
  if (weights.size() != num_classes()) throw Error(ErrorCode::DimensionMismatch, "backward weights length");
  return central_differences(x, [&](const Tensor& p) { return dot(inner_->logits(p), weights); });
}

Tensor NumericalGradientModel::loss_gradient(const Tensor& x, Label label) const {
  check_label(label);
  return central_differences(x, [&](const Tensor& p) { return cross_entropy(inner_->logits(p), label); });
}

}  // namespace robustbench
