#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "urcd/baselines.hpp"

using namespace urcd;

namespace {

Dataset make_dataset(std::size_t n_train, std::size_t n_test, std::size_t S, std::uint64_t seed,
                     const std::function<Point(const Point&, Rng&)>& draw) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DatasetEntry> entries;
  for (std::size_t i = 0; i < n_train + n_test; ++i) {
    Point x{u(rng)};
    std::vector<Point> ys;
    for (std::size_t s = 0; s < S; ++s) ys.push_back(draw(x, rng));
    entries.push_back({x, EmpiricalMeasure(std::move(ys)), 0});
  }
  std::vector<std::size_t> train(n_train), test(n_test);
  std::iota(train.begin(), train.end(), 0);
  std::iota(test.begin(), test.end(), n_train);
  return Dataset(std::move(entries), train, test);
}

RegressorConfig small_config(std::uint64_t seed) {
  RegressorConfig cfg;
  cfg.hidden = {32};
  cfg.activation = Activation::tanh;
  cfg.epochs = 600;
  cfg.learning_rate = 1e-2;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(GaussianMixture, DensityIntegratesToOne) {
  const GaussianMixture g(SimplexVector({0.3, 0.7}), {{-1.0}, {2.0}}, {{0.0}, {std::log(0.5)}});
  double total = 0.0;
  const double h = 1e-3;
  for (double y = -12.0; y < 12.0; y += h) total += std::exp(g.log_density(std::vector<double>{y})) * h;
  EXPECT_NEAR(total, 1.0, 1e-6);
  EXPECT_NEAR(g.mean()[0], 0.3 * -1.0 + 0.7 * 2.0, 1e-15);
}

TEST(EmFit, SingleComponentIsSampleMle) {
  Rng rng(1);
  std::normal_distribution<double> n(3.0, 2.0);
  std::vector<Point> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({n(rng), -n(rng)});
  const auto fit = em_fit_gmm(pts, 1, 10, 7);
  for (std::size_t k = 0; k < 2; ++k) {
    double m = 0.0, v = 0.0;
    for (const auto& p : pts) m += p[k];
    m /= 500.0;
    for (const auto& p : pts) v += (p[k] - m) * (p[k] - m);
    v /= 500.0;
    EXPECT_NEAR(fit.mixture.means()[0][k], m, 1e-10);
    EXPECT_NEAR(std::exp(2.0 * fit.mixture.log_stds()[0][k]), v, 1e-9);
  }
}

TEST(EmFit, SeparatesFarBlobs) {
  Rng rng(2);
  std::normal_distribution<double> n(0.0, 0.5);
  std::vector<Point> pts;
  for (int i = 0; i < 400; ++i) pts.push_back({(i % 2 ? 10.0 : -10.0) + n(rng)});
  const auto fit = em_fit_gmm(pts, 2, 100, 3);
  std::vector<double> means{fit.mixture.means()[0][0], fit.mixture.means()[1][0]};
  std::sort(means.begin(), means.end());
  EXPECT_NEAR(means[0], -10.0, 0.1);
  EXPECT_NEAR(means[1], 10.0, 0.1);
}

TEST(EmFit, LogLikelihoodNonDecreasing) {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Point> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({n(rng) + (i % 3) * 1.5, n(rng)});
    const auto fit = em_fit_gmm(pts, 3, 200, 10 + trial);
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
      EXPECT_GE(fit.log_likelihood[i], fit.log_likelihood[i - 1] - 1e-8);
    }
  }
}

TEST(EmFit, VarianceFloorAndErrors) {
  const std::vector<Point> same(10, Point{1.0});
  const auto fit = em_fit_gmm(same, 1, 5, 0);
  EXPECT_NEAR(std::exp(2.0 * fit.mixture.log_stds()[0][0]), kVarianceFloor, 1e-15);
  EXPECT_THROW(em_fit_gmm(same, 11, 5, 0), std::invalid_argument);
}

TEST(Mdn, ConstantTargetGivesConstantParameters) {
  Rng source(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Point> ys;
  for (int s = 0; s < 200; ++s) ys.push_back({(s % 2 ? 2.0 : -2.0) + 0.3 * n(source)});
  const EmpiricalMeasure fixed(ys);
  const auto data = make_dataset(40, 10, 1, 5, [](const Point&, Rng&) { return Point{0.0}; });
  std::vector<DatasetEntry> entries = data.entries();
  for (auto& e : entries) e.target = fixed;
  const Dataset replicated(entries, data.train_indices(), data.test_indices());
  const auto model = mdn_fit(replicated, 2, small_config(1));
  const auto ref = model.predict_mixture(replicated.entry(data.test_indices()[0]).x);
  for (std::size_t i : data.test_indices()) {
    const auto g = model.predict_mixture(replicated.entry(i).x);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_NEAR(g.weights()[k], ref.weights()[k], 0.05);
      EXPECT_NEAR(g.means()[k][0], ref.means()[k][0], 0.05);
      EXPECT_NEAR(g.log_stds()[k][0], ref.log_stds()[k][0], 0.05);
    }
  }
}

TEST(Mdn, SingleComponentTracksConditionalMean) {
  const double sigma = 0.5;
  const std::size_t S = 200;
  const auto data = make_dataset(60, 20, S, 6, [&](const Point& x, Rng& rng) {
    std::normal_distribution<double> n(2.0 * x[0], sigma);
    return Point{n(rng)};
  });
  const auto model = mdn_fit(data, 1, small_config(2));
  for (std::size_t i : data.test_indices()) {
    const double truth = 2.0 * data.entry(i).x[0];
    EXPECT_NEAR(model.predict_mixture(data.entry(i).x).mean()[0], truth, 3.0 * sigma / std::sqrt(double(S)));
  }
}

TEST(Mdn, ParameterCountMatchesLayers) {
  const auto data = make_dataset(10, 2, 20, 7, [](const Point& x, Rng&) { return Point{x[0], -x[0]}; });
  RegressorConfig cfg = small_config(3);
  cfg.hidden = {6, 4};
  cfg.epochs = 2;
  const auto model = mdn_fit(data, 3, cfg);
  // heads: 3 logits + 3*2 means + 3*2 log-stds
  EXPECT_EQ(model.parameter_count(), (1u * 6 + 6) + (6u * 4 + 4) + (4u * 15 + 15));
}

TEST(MdnPredict, DegenerateMixtureCollapsesToMean) {
  Eigen::VectorXd bias(3);
  bias << 0.0, 1.25, -20.0;
  Mlp net({1, 3}, Activation::identity, {Eigen::MatrixXd::Zero(3, 1)}, {bias});
  const MdnModel model(net, 1, OutputScaling{{0.0}, {1.0}});
  const auto mu = mdn_predict_measure(model, Point{0.0}, 100, 1);
  for (const auto& a : mu.atoms()) EXPECT_NEAR(a[0], 1.25, 1e-6);
}

TEST(MdnPredict, SampleMeanWithinClt) {
  Eigen::VectorXd bias(6);
  bias << std::log(0.25), std::log(0.75), -1.0, 3.0, std::log(0.5), std::log(2.0);
  Mlp net({1, 6}, Activation::identity, {Eigen::MatrixXd::Zero(6, 1)}, {bias});
  const MdnModel model(net, 2, OutputScaling{{0.0}, {1.0}});
  const auto g = model.predict_mixture(Point{0.0});
  EXPECT_NEAR(g.weights()[0], 0.25, 1e-12);
  const double m = g.mean()[0];
  const double var = 0.25 * (0.25 + 1.0) + 0.75 * (4.0 + 9.0) - m * m;
  const std::size_t n = 20000;
  const auto mu = mdn_predict_measure(model, Point{0.0}, n, 9);
  EXPECT_NEAR(mean(mu)[0], m, 4.0 * std::sqrt(var / double(n)));
  EXPECT_TRUE(same_measure(mu, mdn_predict_measure(model, Point{0.0}, n, 9)));
}

TEST(Dgn, ConstantMeanTargets) {
  const auto data = make_dataset(40, 10, 100, 8, [](const Point&, Rng& rng) {
    std::normal_distribution<double> n(0.0, 0.1);
    return Point{1.5 + n(rng), -0.5 + n(rng)};
  });
  const auto model = dgn_fit(data, small_config(4));
  for (std::size_t i : data.test_indices()) {
    const auto p = model.predict(data.entry(i).x);
    EXPECT_NEAR(p.mean(0), 1.5, 0.05);
    EXPECT_NEAR(p.mean(1), -0.5, 0.05);
  }
}

TEST(Dgn, CovarianceIsPsd) {
  Rng rng(9);
  const OutputScaling scaling{{0.0, 0.0, 0.0}, {1.0, 2.0, 0.5}};
  const DgnModel model(Mlp({2, 8, 3 + 9}, Activation::tanh, rng), scaling);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const auto cov = model.predict(Point{n(rng), n(rng)}).covariance();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    EXPECT_TRUE(cov.isApprox(cov.transpose(), 1e-14));
  }
}

TEST(MeanDnn, LearnsLinearMap) {
  const auto data = make_dataset(60, 20, 1, 10, [](const Point& x, Rng&) { return Point{3.0 * x[0] - 1.0}; });
  const auto model = mean_dnn_fit(data, small_config(5));
  for (std::size_t i : data.test_indices()) {
    const auto& x = data.entry(i).x;
    EXPECT_NEAR(model.predict_mean(x)[0], 3.0 * x[0] - 1.0, 0.05);
    EXPECT_EQ(model.predict_measure(x).size(), 1u);
  }
}

TEST(McOracle, ConstantSampler) {
  const auto mu = mc_oracle([](const Point&, Rng&) { return Point{4.0, 2.0}; }, Point{0.0}, 7, 1);
  ASSERT_EQ(mu.size(), 7u);
  for (const auto& a : mu.atoms()) EXPECT_EQ(a, (Point{4.0, 2.0}));
}

TEST(McOracle, DeterministicAndConverging) {
  const PointSampler normal = [](const Point& x, Rng& rng) {
    std::normal_distribution<double> n(x[0], 1.0);
    return Point{n(rng)};
  };
  EXPECT_TRUE(same_measure(mc_oracle(normal, {1.0}, 50, 3), mc_oracle(normal, {1.0}, 50, 3)));
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    small += w1_1d(mc_oracle(normal, {0.0}, 1000, 2 * s), mc_oracle(normal, {0.0}, 1000, 2 * s + 1));
    large += w1_1d(mc_oracle(normal, {0.0}, 10000, 2 * s), mc_oracle(normal, {0.0}, 10000, 2 * s + 1));
  }
  EXPECT_LT(large, small);
}
