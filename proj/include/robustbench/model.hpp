#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robustbench/tensor.hpp"

namespace robustbench {

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[label]; accurate even when the loss is tiny.
double cross_entropy(std::span<const double> logits, Label label);

/// Index of the largest logit; ties go to the smallest index.
std::size_t argmax(std::span<const double> logits);

struct ForwardGradient {
  std::vector<double> logits;
  Tensor gradient;
};

// Predictions are unnormalized logits. Gradients are gradients of the
// softmax cross-entropy loss with respect to the input. `backward` is the
// vector-Jacobian product of the logits and is what targeted attacks use to
// get per-class directions.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t num_classes() const = 0;
  virtual Bounds bounds() const = 0;
  virtual const Shape& input_shape() const = 0;

  virtual std::vector<double> logits(const Tensor& x) const = 0;

  /// Gradient of sum_k weights[k] * logits_k(x) with respect to x.
  /// The default throws GradientUnavailable.
  virtual Tensor backward(const Tensor& x, std::span<const double> weights) const;

  /// Gradient of cross_entropy(logits(x), label). The default goes through
  /// backward() with weights softmax(logits) - onehot(label).
  virtual Tensor loss_gradient(const Tensor& x, Label label) const;

  virtual ForwardGradient forward_and_gradient(const Tensor& x, Label label) const;

  double loss(const Tensor& x, Label label) const;

  std::size_t input_size() const { return shape_size(input_shape()); }
  void check_input(const Tensor& x) const;
  void check_label(Label label) const;
};

using ModelPtr = std::shared_ptr<const Model>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

enum class Activation { Identity, Relu };

struct DenseLayer {
  Matrix weights;  // [out x in]
  std::vector<double> biases;
  Activation activation = Activation::Identity;

  bool operator==(const DenseLayer&) const = default;
};

/// logits = W x + b.
class LinearSoftmaxModel final : public Model {
 public:
  LinearSoftmaxModel(Matrix weights, std::vector<double> biases, Bounds bounds, Shape input_shape = {});

  std::size_t num_classes() const override { return weights_.rows; }
  Bounds bounds() const override { return bounds_; }
  const Shape& input_shape() const override { return shape_; }

  std::vector<double> logits(const Tensor& x) const override;
  Tensor backward(const Tensor& x, std::span<const double> weights) const override;

  const Matrix& weights() const { return weights_; }
  const std::vector<double>& biases() const { return biases_; }

 private:
  Matrix weights_;
  std::vector<double> biases_;
  Bounds bounds_;
  Shape shape_;
};

/// Fully connected network; the last layer emits logits.
class MlpModel final : public Model {
 public:
  MlpModel(std::vector<DenseLayer> layers, Bounds bounds, Shape input_shape = {});

  std::size_t num_classes() const override { return layers_.back().weights.rows; }
  Bounds bounds() const override { return bounds_; }
  const Shape& input_shape() const override { return shape_; }

  std::vector<double> logits(const Tensor& x) const override;
  Tensor backward(const Tensor& x, std::span<const double> weights) const override;

  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
  Bounds bounds_;
  Shape shape_;
};

/// Predictions from one model, gradients from another.
class CompositeModel final : public Model {
 public:
  CompositeModel(ModelPtr forward_model, ModelPtr backward_model);

  std::size_t num_classes() const override { return forward_->num_classes(); }
  Bounds bounds() const override { return forward_->bounds(); }
  const Shape& input_shape() const override { return forward_->input_shape(); }

  std::vector<double> logits(const Tensor& x) const override { return forward_->logits(x); }
  Tensor backward(const Tensor& x, std::span<const double> weights) const override;
  Tensor loss_gradient(const Tensor& x, Label label) const override;
  ForwardGradient forward_and_gradient(const Tensor& x, Label label) const override;

 private:
  ModelPtr forward_;
  ModelPtr backward_;
};

/// Wraps any model and differentiates it with central differences.
///
/// Probes are x_i +/- step * (b_max - b_min), clipped to the bounds; at a
/// saturated coordinate this turns into a one-sided difference.
class NumericalGradientModel final : public Model {
 public:
  explicit NumericalGradientModel(ModelPtr inner, double step = 1e-5);

  std::size_t num_classes() const override { return inner_->num_classes(); }
  Bounds bounds() const override { return inner_->bounds(); }
  const Shape& input_shape() const override { return inner_->input_shape(); }

  std::vector<double> logits(const Tensor& x) const override { return inner_->logits(x); }
  Tensor backward(const Tensor& x, std::span<const double> weights) const override;
  Tensor loss_gradient(const Tensor& x, Label label) const override;

  double step() const { return step_; }

 private:
  template <typename Scalar>
  Tensor central_differences(const Tensor& x, Scalar&& scalar) const;

  ModelPtr inner_;
  double step_;
};

/// Loads a model from the JSON model file format.
ModelPtr load_model(const std::string& path);
ModelPtr parse_model(const std::string& json_text);

/// Serializes linear and MLP models; other models throw InvalidParameter.
std::string serialize_model(const Model& model);
void save_model(const Model& model, const std::string& path);

}  // namespace robustbench
