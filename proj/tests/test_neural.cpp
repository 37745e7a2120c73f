#include <gtest/gtest.h>

#include <cmath>

#include "urcd/neural.hpp"

using namespace urcd;

namespace {

std::vector<ClassificationExample> random_batch(std::size_t d, std::size_t classes, std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> label(0, classes - 1);
  std::vector<ClassificationExample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    Point x(d);
    for (double& v : x) v = g(rng);
    batch.push_back({x, SimplexVector::one_hot(classes, label(rng))});
  }
  return batch;
}

bool near_kink(const Mlp& net, const std::vector<ClassificationExample>& batch) {
  std::vector<Point> xs;
  for (const auto& e : batch) xs.push_back(e.x);
  const auto trace = forward_trace(net, to_matrix(xs));
  for (std::size_t j = 0; j + 1 < trace.pre.size(); ++j) {
    if ((trace.pre[j].array().abs() < 1e-3).any()) return true;
  }
  return false;
}

// Independent central differences of the mean cross-entropy for one weight.
double fd_weight(Mlp net, const std::vector<ClassificationExample>& batch, std::size_t layer, Eigen::Index r,
                 Eigen::Index c, double h) {
  auto loss = [&](const Mlp& m) {
    double total = 0.0;
    for (const auto& e : batch) {
      const Eigen::VectorXd z = m.forward(e.x);
      const double mx = z.maxCoeff();
      const double lse = mx + std::log((z.array() - mx).exp().sum());
      for (std::size_t k = 0; k < e.label.size(); ++k) total -= e.label[k] * (z(static_cast<Eigen::Index>(k)) - lse);
    }
    return total / static_cast<double>(batch.size());
  };
  const double orig = net.weight(layer)(r, c);
  net.weight(layer)(r, c) = orig + h;
  const double up = loss(net);
  net.weight(layer)(r, c) = orig - h;
  const double down = loss(net);
  return (up - down) / (2.0 * h);
}

}  // namespace

TEST(Mlp, IdentityLayer) {
  Mlp net({2, 2}, Activation::relu, {Eigen::MatrixXd::Identity(2, 2)}, {Eigen::VectorXd::Zero(2)});
  const auto y = net.forward(Point{0.3, -4.0});
  EXPECT_DOUBLE_EQ(y(0), 0.3);
  EXPECT_DOUBLE_EQ(y(1), -4.0);
}

TEST(Mlp, ZeroWeightsReturnFinalBias) {
  Eigen::VectorXd b(1);
  b << 2.5;
  Mlp net({3, 4, 1}, Activation::tanh, {Eigen::MatrixXd::Zero(4, 3), Eigen::MatrixXd::Zero(1, 4)},
          {Eigen::VectorXd::Ones(4), b});
  EXPECT_DOUBLE_EQ(net.forward(Point{1.0, 2.0, 3.0})(0), 2.5);
  EXPECT_DOUBLE_EQ(net.forward(Point{-7.0, 0.0, 9.0})(0), 2.5);
}

TEST(Mlp, HandComputedTwoLayerRelu) {
  Eigen::MatrixXd w1(2, 2), w2(1, 2);
  w1 << 2.0, 1.0, 1.0, -1.0;
  w2 << 1.0, -2.0;
  Eigen::VectorXd b1(2), b2(1);
  b1 << 0.0, 0.5;
  b2 << 3.0;
  Mlp net({2, 2, 1}, Activation::relu, {w1, w2}, {b1, b2});
  // hidden = relu((1, 2) + (0, 0.5)) = (1, 2.5); out = 1 - 5 + 3
  EXPECT_DOUBLE_EQ(net.forward(Point{1.0, -1.0})(0), -1.0);
}

TEST(Mlp, DimensionMismatchThrows) {
  Rng rng(1);
  Mlp net({3, 2}, Activation::relu, rng);
  EXPECT_THROW(net.forward(Point{1.0}), std::invalid_argument);
}

TEST(Mlp, ParameterCount) {
  Rng rng(1);
  Mlp net({3, 7, 5, 2}, Activation::relu, rng);
  EXPECT_EQ(net.parameter_count(), 3u * 7 + 7 + 7 * 5 + 5 + 5 * 2 + 2);
}

TEST(Mlp, GlorotBounds) {
  Rng rng(2);
  Mlp net({10, 30}, Activation::relu, rng);
  const double bound = std::sqrt(6.0 / 40.0);
  EXPECT_LE(net.weight(0).cwiseAbs().maxCoeff(), bound);
  EXPECT_EQ(net.bias(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mlp, BatchMatchesSingle) {
  Rng rng(3);
  Mlp net({2, 5, 3}, Activation::sigmoid, rng);
  const std::vector<Point> xs{{0.1, 0.2}, {-1.0, 3.0}};
  const auto out = net.forward_batch(to_matrix(xs));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_TRUE(out.col(static_cast<Eigen::Index>(i)).isApprox(net.forward(xs[i]), 1e-14));
  }
}

TEST(Softmax, Examples) {
  const auto u = softmax(std::vector<double>(4, 0.0));
  for (double w : u) EXPECT_DOUBLE_EQ(w, 0.25);
  const auto s = softmax(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvarianceAndSimplex) {
  Rng rng(4);
  std::normal_distribution<double> g(0.0, 5.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(6), shifted(6);
    const double c = g(rng) * 100.0;
    for (std::size_t i = 0; i < 6; ++i) {
      v[i] = g(rng);
      shifted[i] = v[i] + c;
    }
    const auto a = softmax(v), b = softmax(shifted);
    EXPECT_EQ(a.argmax(), b.argmax());
    double sum = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-12);
      EXPECT_GE(a[i], 0.0);
      sum += a[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Softmax, ExtremeLogitsStayFinite) {
  const auto s = softmax(std::vector<double>{1000.0, -1000.0});
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 0.0);
}

TEST(CrossEntropy, ZeroLogitsGiveLogN) {
  Mlp net({2, 5}, Activation::identity, {Eigen::MatrixXd::Zero(5, 2)}, {Eigen::VectorXd::Zero(5)});
  const std::vector<ClassificationExample> batch{{{1.0, 2.0}, SimplexVector::one_hot(5, 3)},
                                                 {{0.0, -1.0}, SimplexVector::one_hot(5, 0)}};
  EXPECT_NEAR(cross_entropy_grad(net, batch).loss, std::log(5.0), 1e-14);
}

TEST(CrossEntropy, ConfidentCorrectLogitsVanish) {
  Eigen::VectorXd b(3);
  b << 0.0, 50.0, 0.0;
  Mlp net({1, 3}, Activation::identity, {Eigen::MatrixXd::Zero(3, 1)}, {b});
  const std::vector<ClassificationExample> batch{{{0.5}, SimplexVector::one_hot(3, 1)}};
  const auto r = cross_entropy_grad(net, batch);
  EXPECT_LT(r.loss, 1e-3);
  EXPECT_LT(r.grads.max_abs(), 1e-3);
}

TEST(CrossEntropy, LabelLengthMismatchThrows) {
  Rng rng(5);
  Mlp net({2, 3}, Activation::relu, rng);
  const std::vector<ClassificationExample> batch{{{1.0, 2.0}, SimplexVector::one_hot(4, 0)}};
  EXPECT_THROW(cross_entropy_grad(net, batch), std::invalid_argument);
  EXPECT_THROW(cross_entropy_grad(net, std::vector<ClassificationExample>{}), std::invalid_argument);
}

TEST(CrossEntropy, MatchesIndependentFiniteDifferences) {
  Rng rng(6);
  Mlp net({3, 4, 3}, Activation::tanh, rng);
  const auto batch = random_batch(3, 3, 6, rng);
  const auto r = cross_entropy_grad(net, batch);
  for (std::size_t layer = 0; layer < net.layers(); ++layer) {
    for (Eigen::Index i = 0; i < net.weight(layer).rows(); ++i) {
      for (Eigen::Index j = 0; j < net.weight(layer).cols(); ++j) {
        const double fd = fd_weight(net, batch, layer, i, j, 1e-5);
        EXPECT_NEAR(r.grads.weights[layer](i, j), fd, 1e-4 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(SquaredError, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  Mlp net({2, 3, 2}, Activation::sigmoid, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 5), y = Eigen::MatrixXd::Random(2, 5);
  const auto r = squared_error_grad(net, x, y);
  const double h = 1e-6;
  for (std::size_t layer = 0; layer < net.layers(); ++layer) {
    for (Eigen::Index i = 0; i < net.bias(layer).size(); ++i) {
      Mlp up = net, down = net;
      up.bias(layer)(i) += h;
      down.bias(layer)(i) -= h;
      auto loss = [&](const Mlp& m) { return 0.5 * (m.forward_batch(x) - y).colwise().squaredNorm().mean(); };
      EXPECT_NEAR(r.grads.biases[layer](i), (loss(up) - loss(down)) / (2 * h), 1e-7);
    }
  }
}

TEST(GradCheck, LinearNetIsExact) {
  Rng rng(8);
  Mlp net({3, 4, 2}, Activation::identity, rng);
  const auto batch = random_batch(3, 2, 5, rng);
  EXPECT_LT(grad_check(net, batch), 1e-7);
}

TEST(GradCheck, TanhNet) {
  Rng rng(9);
  Mlp net({4, 6, 5, 3}, Activation::tanh, rng);
  const auto batch = random_batch(4, 3, 8, rng);
  EXPECT_LT(grad_check(net, batch), 1e-4);
}

TEST(GradCheck, ReluNetAwayFromKinks) {
  Rng rng(10);
  Mlp net({4, 6, 3}, Activation::relu, rng);
  auto batch = random_batch(4, 3, 8, rng);
  while (near_kink(net, batch)) batch = random_batch(4, 3, 8, rng);
  EXPECT_LT(grad_check(net, batch), 1e-4);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(11);
  Mlp net({2, 3, 1}, Activation::relu, rng);
  const Mlp before = net;
  auto state = AdamState::for_network(net, 0.1);
  adam_step(net, state, Gradients::zeros_like(net));
  EXPECT_EQ(state.step, 1u);
  for (std::size_t l = 0; l < net.layers(); ++l) {
    EXPECT_EQ(net.weight(l), before.weight(l));
    EXPECT_EQ(net.bias(l), before.bias(l));
  }
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  Rng rng(12);
  Mlp net({2, 2}, Activation::identity, rng);
  const Mlp before = net;
  auto state = AdamState::for_network(net, 0.01);
  auto g = Gradients::zeros_like(net);
  g.weights[0] << 0.5, -3.0, 1e-3, -2e-2;
  g.biases[0] << 10.0, -0.1;
  adam_step(net, state, g);
  // m_hat = g and v_hat = g^2 at step 1, so the update is -lr * g / (|g| + eps).
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double gij = g.weights[0](i, j);
      EXPECT_NEAR(net.weight(0)(i, j) - before.weight(0)(i, j), -0.01 * gij / (std::abs(gij) + 1e-8), 1e-15);
    }
    const double gi = g.biases[0](i);
    EXPECT_NEAR(net.bias(0)(i) - before.bias(0)(i), -0.01 * gi / (std::abs(gi) + 1e-8), 1e-15);
  }
}

TEST(Adam, Deterministic) {
  Rng rng(13);
  Mlp a({2, 3, 2}, Activation::tanh, rng);
  Mlp b = a;
  auto sa = AdamState::for_network(a, 0.05), sb = AdamState::for_network(b, 0.05);
  const auto batch = random_batch(2, 2, 4, rng);
  for (int i = 0; i < 3; ++i) {
    adam_step(a, sa, cross_entropy_grad(a, batch).grads);
    adam_step(b, sb, cross_entropy_grad(b, batch).grads);
  }
  for (std::size_t l = 0; l < a.layers(); ++l) EXPECT_EQ(a.weight(l), b.weight(l));
}

TEST(Adam, ShapeMismatchThrows) {
  Rng rng(14);
  Mlp a({2, 3}, Activation::relu, rng), b({2, 4}, Activation::relu, rng);
  auto state = AdamState::for_network(a, 0.1);
  EXPECT_THROW(adam_step(a, state, Gradients::zeros_like(b)), std::invalid_argument);
}

TEST(Adam, ReducesLossOnSeparableProblem) {
  Rng rng(15);
  std::vector<ClassificationExample> batch;
  std::normal_distribution<double> g(0.0, 0.3);
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    batch.push_back({{(pos ? 2.0 : -2.0) + g(rng), g(rng)}, SimplexVector::one_hot(2, pos ? 1 : 0)});
  }
  Mlp net({2, 8, 2}, Activation::relu, rng);
  auto state = AdamState::for_network(net, 1e-2);
  const double initial = cross_entropy_grad(net, batch).loss;
  for (int step = 0; step < 200; ++step) adam_step(net, state, cross_entropy_grad(net, batch).grads);
  EXPECT_LT(cross_entropy_grad(net, batch).loss, initial);
}

TEST(Activation, RoundTripNames) {
  for (auto a : {Activation::relu, Activation::tanh, Activation::sigmoid, Activation::identity}) {
    EXPECT_EQ(activation_from_string(to_string(a)), a);
  }
  EXPECT_THROW(activation_from_string("swish"), std::invalid_argument);
}
