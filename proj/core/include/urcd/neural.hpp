#pragma once

// Dense feed-forward networks with reverse-mode gradients and Adam.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urcd/measures.hpp"
#include "urcd/random.hpp"

namespace urcd {

enum class Activation { relu, tanh, sigmoid, identity };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

/// x -> W_{J+1} s(W_J s(... s(W_1 x + b_1) ...) + b_J) + b_{J+1}; the
/// activation s is applied after every affine layer except the last.
class Mlp {
 public:
  /// Glorot-uniform weights drawn from `rng`, zero biases.
  Mlp(std::vector<std::size_t> layer_dims, Activation activation, Rng& rng);
  Mlp(std::vector<std::size_t> layer_dims, Activation activation,
      std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  Activation activation() const noexcept { return activation_; }
  std::size_t input_dim() const noexcept { return dims_.front(); }
  std::size_t output_dim() const noexcept { return dims_.back(); }
  std::size_t layers() const noexcept { return weights_.size(); }

  const Eigen::MatrixXd& weight(std::size_t layer) const { return weights_[layer]; }
  const Eigen::VectorXd& bias(std::size_t layer) const { return biases_[layer]; }
  Eigen::MatrixXd& weight(std::size_t layer) { return weights_[layer]; }
  Eigen::VectorXd& bias(std::size_t layer) { return biases_[layer]; }

  /// sum_j (d_j * d_{j+1} + d_{j+1})
  std::size_t parameter_count() const noexcept;

  Eigen::VectorXd forward(std::span<const double> x) const;
  /// Columns of `inputs` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

 private:
  void validate() const;

  std::vector<std::size_t> dims_;
  Activation activation_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Parameter-shaped collection (gradients, Adam moments).
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Gradients zeros_like(const Mlp& net);
  bool same_shape(const Mlp& net) const noexcept;
  double max_abs() const noexcept;
};

/// Cached pre- and post-activations of a batch forward pass.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> inputs;  // inputs[j] feeds affine layer j
  std::vector<Eigen::MatrixXd> pre;     // pre[j] = W_j inputs[j] + b_j
  Eigen::MatrixXd output;
};

ForwardTrace forward_trace(const Mlp& net, const Eigen::MatrixXd& inputs);

/// Reverse-mode accumulation given dLoss/dOutput (output_dim x batch).
Gradients backward(const Mlp& net, const ForwardTrace& trace, const Eigen::MatrixXd& output_grad);

SimplexVector softmax(std::span<const double> logits);
/// Column-wise softmax.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

struct ClassificationExample {
  Point x;
  SimplexVector label;
};

/// Mean negative log-likelihood of softmax(net(x)) against (possibly soft)
/// labels. Columns of `inputs` / `targets` are samples.
LossAndGradients cross_entropy_grad(const Mlp& net, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& targets);
LossAndGradients cross_entropy_grad(const Mlp& net, std::span<const ClassificationExample> batch);

/// Mean over samples of 0.5 * ||net(x) - y||^2.
LossAndGradients squared_error_grad(const Mlp& net, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& targets);

struct AdamState {
  std::size_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_network(const Mlp& net, double learning_rate);
};

/// Bias-corrected Adam update of `net` in place.
void adam_step(Mlp& net, AdamState& state, const Gradients& grads);

/// Largest relative discrepancy |a - n| / max(|a|, |n|, 1e-6) between analytic
/// cross-entropy gradients and central differences with step h, over every
/// parameter.
double grad_check(const Mlp& net, std::span<const ClassificationExample> batch, double h = 1e-5);

Eigen::MatrixXd to_matrix(std::span<const Point> columns);

}  // namespace urcd
