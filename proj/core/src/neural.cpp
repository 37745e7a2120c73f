#include "urcd/neural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace urcd {
namespace {

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::identity:
      return z;
  }
  return z;
}

// Derivative of the activation evaluated at pre-activation z; relu'(0) = 0.
Eigen::ArrayXXd activation_slope(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::relu:
      return (z.array() > 0.0).cast<double>();
    case Activation::tanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return 1.0 - t.square();
    }
    case Activation::sigmoid: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return s * (1.0 - s);
    }
    case Activation::identity:
      return Eigen::ArrayXXd::Ones(z.rows(), z.cols());
  }
  return Eigen::ArrayXXd::Ones(z.rows(), z.cols());
}

Eigen::MatrixXd log_softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double hi = logits.col(c).maxCoeff();
    const double lse = hi + std::log((logits.col(c).array() - hi).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<std::size_t> layer_dims, Activation activation, Rng& rng)
    : dims_(std::move(layer_dims)), activation_(activation) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (std::size_t j = 0; j + 1 < dims_.size(); ++j) {
    const auto fan_in = static_cast<Eigen::Index>(dims_[j]);
    const auto fan_out = static_cast<Eigen::Index>(dims_[j + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-limit, limit);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = unif(rng);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  validate();
}

Mlp::Mlp(std::vector<std::size_t> layer_dims, Activation activation,
         std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases)
    : dims_(std::move(layer_dims)),
      activation_(activation),
      weights_(std::move(weights)),
      biases_(std::move(biases)) {
  validate();
}

void Mlp::validate() const {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  if (weights_.size() + 1 != dims_.size() || biases_.size() + 1 != dims_.size()) {
    throw std::invalid_argument("Mlp: layer count does not match layer_dims");
  }
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (dims_[j] == 0 || dims_[j + 1] == 0) throw std::invalid_argument("Mlp: zero-width layer");
    if (static_cast<std::size_t>(weights_[j].rows()) != dims_[j + 1] ||
        static_cast<std::size_t>(weights_[j].cols()) != dims_[j] ||
        static_cast<std::size_t>(biases_[j].size()) != dims_[j + 1]) {
      throw std::invalid_argument("Mlp: parameter shape mismatch at layer " + std::to_string(j));
    }
    if (!weights_[j].allFinite() || !biases_[j].allFinite()) {
      throw std::invalid_argument("Mlp: non-finite parameter at layer " + std::to_string(j));
    }
  }
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t j = 0; j + 1 < dims_.size(); ++j) n += dims_[j] * dims_[j + 1] + dims_[j + 1];
  return n;
}

Eigen::VectorXd Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("Mlp::forward: input has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim()));
  }
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    Eigen::VectorXd z = weights_[j] * h + biases_[j];
    h = j + 1 < weights_.size() ? Eigen::VectorXd(activate(activation_, z)) : z;
  }
  return h;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  return forward_trace(*this, inputs).output;
}

Gradients Gradients::zeros_like(const Mlp& net) {
  Gradients g;
  for (std::size_t j = 0; j < net.layers(); ++j) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weight(j).rows(), net.weight(j).cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.bias(j).size()));
  }
  return g;
}

bool Gradients::same_shape(const Mlp& net) const noexcept {
  if (weights.size() != net.layers() || biases.size() != net.layers()) return false;
  for (std::size_t j = 0; j < net.layers(); ++j) {
    if (weights[j].rows() != net.weight(j).rows() || weights[j].cols() != net.weight(j).cols() ||
        biases[j].size() != net.bias(j).size()) {
      return false;
    }
  }
  return true;
}

double Gradients::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

ForwardTrace forward_trace(const Mlp& net, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != net.input_dim()) {
    throw std::invalid_argument("forward_trace: input rows " + std::to_string(inputs.rows()) +
                                " != network input dim " + std::to_string(net.input_dim()));
  }
  ForwardTrace t;
  t.inputs.push_back(inputs);
  for (std::size_t j = 0; j < net.layers(); ++j) {
    Eigen::MatrixXd z = net.weight(j) * t.inputs.back();
    z.colwise() += net.bias(j);
    if (j + 1 < net.layers()) t.inputs.push_back(activate(net.activation(), z));
    t.pre.push_back(std::move(z));
  }
  t.output = t.pre.back();
  return t;
}

Gradients backward(const Mlp& net, const ForwardTrace& trace, const Eigen::MatrixXd& output_grad) {
  Gradients g = Gradients::zeros_like(net);
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t j = net.layers(); j-- > 0;) {
    g.weights[j] = delta * trace.inputs[j].transpose();
    g.biases[j] = delta.rowwise().sum();
    if (j > 0) {
      delta = ((net.weight(j).transpose() * delta).array() *
               activation_slope(net.activation(), trace.pre[j - 1]))
                  .matrix();
    }
  }
  return g;
}

SimplexVector softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - hi);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return SimplexVector(std::move(p));
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  return log_softmax_columns(logits).array().exp().matrix();
}

LossAndGradients cross_entropy_grad(const Mlp& net, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& targets) {
  if (static_cast<std::size_t>(targets.rows()) != net.output_dim()) {
    throw std::invalid_argument("cross_entropy_grad: label length " +
                                std::to_string(targets.rows()) + " != output dim " +
                                std::to_string(net.output_dim()));
  }
  if (inputs.cols() == 0 || inputs.cols() != targets.cols()) {
    throw std::invalid_argument("cross_entropy_grad: empty or ragged batch");
  }
  const auto batch = static_cast<double>(inputs.cols());
  const ForwardTrace trace = forward_trace(net, inputs);
  const Eigen::MatrixXd log_p = log_softmax_columns(trace.output);
  LossAndGradients out;
  out.loss = -(targets.array() * log_p.array()).sum() / batch;
  Eigen::MatrixXd dz = log_p.array().exp().matrix();
  for (Eigen::Index c = 0; c < dz.cols(); ++c) dz.col(c) *= targets.col(c).sum();
  dz = (dz - targets) / batch;
  out.grads = backward(net, trace, dz);
  return out;
}

LossAndGradients cross_entropy_grad(const Mlp& net, std::span<const ClassificationExample> batch) {
  if (batch.empty()) throw std::invalid_argument("cross_entropy_grad: empty batch");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(net.input_dim()), static_cast<Eigen::Index>(batch.size()));
  Eigen::MatrixXd y(static_cast<Eigen::Index>(net.output_dim()), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t c = 0; c < batch.size(); ++c) {
    if (batch[c].x.size() != net.input_dim()) {
      throw std::invalid_argument("cross_entropy_grad: input dimension mismatch");
    }
    if (batch[c].label.size() != net.output_dim()) {
      throw std::invalid_argument("cross_entropy_grad: label length " +
                                  std::to_string(batch[c].label.size()) + " != output dim " +
                                  std::to_string(net.output_dim()));
    }
    const auto col = static_cast<Eigen::Index>(c);
    for (std::size_t r = 0; r < net.input_dim(); ++r) x(static_cast<Eigen::Index>(r), col) = batch[c].x[r];
    for (std::size_t r = 0; r < net.output_dim(); ++r) y(static_cast<Eigen::Index>(r), col) = batch[c].label[r];
  }
  return cross_entropy_grad(net, x, y);
}

LossAndGradients squared_error_grad(const Mlp& net, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& targets) {
  if (static_cast<std::size_t>(targets.rows()) != net.output_dim() ||
      inputs.cols() != targets.cols() || inputs.cols() == 0) {
    throw std::invalid_argument("squared_error_grad: target shape mismatch");
  }
  const auto batch = static_cast<double>(inputs.cols());
  const ForwardTrace trace = forward_trace(net, inputs);
  const Eigen::MatrixXd diff = trace.output - targets;
  LossAndGradients out;
  out.loss = 0.5 * diff.squaredNorm() / batch;
  out.grads = backward(net, trace, diff / batch);
  return out;
}

AdamState AdamState::for_network(const Mlp& net, double learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("AdamState: learning rate must be positive");
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = Gradients::zeros_like(net);
  s.second_moment = Gradients::zeros_like(net);
  return s;
}

void adam_step(Mlp& net, AdamState& state, const Gradients& grads) {
  if (!grads.same_shape(net) || !state.first_moment.same_shape(net) ||
      !state.second_moment.same_shape(net)) {
    throw std::invalid_argument("adam_step: gradient/optimizer shapes do not match the network");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    param.array() -= state.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t j = 0; j < net.layers(); ++j) {
    update(net.weight(j), state.first_moment.weights[j], state.second_moment.weights[j],
           grads.weights[j]);
    update(net.bias(j), state.first_moment.biases[j], state.second_moment.biases[j],
           grads.biases[j]);
  }
}

double grad_check(const Mlp& net, std::span<const ClassificationExample> batch, double h) {
  const Gradients analytic = cross_entropy_grad(net, batch).grads;
  Mlp probe = net;
  double worst = 0.0;
  auto compare = [&](double& param, double exact) {
    const double saved = param;
    param = saved + h;
    const double up = cross_entropy_grad(probe, batch).loss;
    param = saved - h;
    const double down = cross_entropy_grad(probe, batch).loss;
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(exact - numeric) / scale);
  };
  for (std::size_t j = 0; j < probe.layers(); ++j) {
    for (Eigen::Index r = 0; r < probe.weight(j).rows(); ++r) {
      for (Eigen::Index c = 0; c < probe.weight(j).cols(); ++c) {
        compare(probe.weight(j)(r, c), analytic.weights[j](r, c));
      }
    }
    for (Eigen::Index r = 0; r < probe.bias(j).size(); ++r) {
      compare(probe.bias(j)(r), analytic.biases[j](r));
    }
  }
  return worst;
}

Eigen::MatrixXd to_matrix(std::span<const Point> columns) {
  if (columns.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(columns.front().size()),
                    static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != columns.front().size()) {
      throw std::invalid_argument("to_matrix: ragged columns");
    }
    for (std::size_t r = 0; r < columns[c].size(); ++r) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = columns[c][r];
    }
  }
  return m;
}

}  // namespace urcd
