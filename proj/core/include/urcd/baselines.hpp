#pragma once

// Comparison models: mixture density network, Gaussian (mean + covariance)
// network, plain mean regressor, and the Monte-Carlo oracle.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "urcd/measures.hpp"
#include "urcd/neural.hpp"
#include "urcd/training.hpp"

namespace urcd {

inline constexpr double kVarianceFloor = 1e-6;

/// Diagonal-covariance Gaussian mixture on R^D.
class GaussianMixture {
 public:
  GaussianMixture(SimplexVector weights, std::vector<Point> means, std::vector<Point> log_stds);

  std::size_t components() const noexcept { return means_.size(); }
  std::size_t dim() const noexcept { return means_.front().size(); }
  const SimplexVector& weights() const noexcept { return weights_; }
  const std::vector<Point>& means() const noexcept { return means_; }
  const std::vector<Point>& log_stds() const noexcept { return log_stds_; }

  Point mean() const;
  double log_density(std::span<const double> y) const;
  Point draw(Rng& rng) const;

 private:
  SimplexVector weights_;
  std::vector<Point> means_;
  std::vector<Point> log_stds_;
};

struct GmmFit {
  GaussianMixture mixture;
  std::vector<double> log_likelihood;  // total log-likelihood at each E-step
};

/// EM for a K-component diagonal GMM with k-means++ seeding; variances are
/// floored at kVarianceFloor.
GmmFit em_fit_gmm(std::span<const Point> points, std::size_t k, std::size_t iters,
                  std::uint64_t seed);

/// Shared optimisation settings of the regression baselines.
struct RegressorConfig {
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::relu;
  std::size_t epochs = 500;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

/// Per-output affine standardisation y = offset + scale * z.
struct OutputScaling {
  Point offset;
  Point scale;

  static OutputScaling fit(std::span<const Point> samples);
};

/// One network whose linear read-out is split into the three heads
/// [K logits | K*D means | K*D log-stds] (standardised units).
class MdnModel {
 public:
  MdnModel(Mlp net, std::size_t components, OutputScaling scaling);

  const Mlp& net() const noexcept { return net_; }
  std::size_t components() const noexcept { return k_; }
  std::size_t output_dim() const noexcept { return scaling_.offset.size(); }
  const OutputScaling& scaling() const noexcept { return scaling_; }
  std::size_t parameter_count() const noexcept { return net_.parameter_count(); }

  GaussianMixture predict_mixture(std::span<const double> x) const;

 private:
  Mlp net_;
  std::size_t k_;
  OutputScaling scaling_;
};

MdnModel mdn_fit(const Dataset& data, std::size_t components, const RegressorConfig& cfg,
                 std::size_t em_iters = 100);

/// n_samples draws from the predicted mixture, uniform weights.
EmpiricalMeasure mdn_predict_measure(const MdnModel& model, std::span<const double> x,
                                     std::size_t n_samples, std::uint64_t seed);

struct GaussianPrediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd factor;  // covariance = factor * factor^T

  Eigen::MatrixXd covariance() const { return factor * factor.transpose(); }
};

/// Network emitting (mean, D x D factor).
class DgnModel {
 public:
  DgnModel(Mlp net, OutputScaling scaling);

  const Mlp& net() const noexcept { return net_; }
  std::size_t output_dim() const noexcept { return scaling_.offset.size(); }
  const OutputScaling& scaling() const noexcept { return scaling_; }
  std::size_t parameter_count() const noexcept { return net_.parameter_count(); }

  GaussianPrediction predict(std::span<const double> x) const;
  EmpiricalMeasure predict_measure(std::span<const double> x, std::size_t n_samples,
                                   std::uint64_t seed) const;

 private:
  Mlp net_;
  OutputScaling scaling_;
};

DgnModel dgn_fit(const Dataset& data, const RegressorConfig& cfg);

/// Regressor onto the per-input sample mean; predicts a Dirac.
class MeanModel {
 public:
  MeanModel(Mlp net, OutputScaling scaling);

  const Mlp& net() const noexcept { return net_; }
  const OutputScaling& scaling() const noexcept { return scaling_; }
  std::size_t parameter_count() const noexcept { return net_.parameter_count(); }

  Point predict_mean(std::span<const double> x) const;
  EmpiricalMeasure predict_measure(std::span<const double> x) const {
    return EmpiricalMeasure::dirac(predict_mean(x));
  }

 private:
  Mlp net_;
  OutputScaling scaling_;
};

MeanModel mean_dnn_fit(const Dataset& data, const RegressorConfig& cfg);

/// One draw from the true conditional law at x.
using PointSampler = std::function<Point(const Point& x, Rng& rng)>;

/// Uniform empirical measure on S i.i.d. draws at x, driven by Rng(seed).
EmpiricalMeasure mc_oracle(const PointSampler& sampler, const Point& x, std::size_t samples,
                           std::uint64_t seed);

}  // namespace urcd
