#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "urcd/baselines.hpp"

namespace urcd {

GaussianMixture::GaussianMixture(SimplexVector weights, std::vector<Point> means,
                                 std::vector<Point> log_stds)
    : weights_(std::move(weights)), means_(std::move(means)), log_stds_(std::move(log_stds)) {
  if (means_.empty() || means_.size() != weights_.size() || log_stds_.size() != means_.size()) {
    throw std::invalid_argument("GaussianMixture: component count mismatch");
  }
  const std::size_t d = means_.front().size();
  if (d == 0) throw std::invalid_argument("GaussianMixture: zero dimension");
  for (std::size_t k = 0; k < means_.size(); ++k) {
    if (means_[k].size() != d || log_stds_[k].size() != d) {
      throw std::invalid_argument("GaussianMixture: inconsistent component shapes");
    }
    for (double v : log_stds_[k]) {
      if (!std::isfinite(v)) throw std::invalid_argument("GaussianMixture: non-finite log-std");
    }
  }
}

Point GaussianMixture::mean() const {
  Point m(dim(), 0.0);
  for (std::size_t k = 0; k < components(); ++k) {
    for (std::size_t c = 0; c < dim(); ++c) m[c] += weights_[k] * means_[k][c];
  }
  return m;
}

double GaussianMixture::log_density(std::span<const double> y) const {
  if (y.size() != dim()) throw std::invalid_argument("GaussianMixture::log_density: dimension mismatch");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  std::vector<double> terms;
  for (std::size_t k = 0; k < components(); ++k) {
    if (weights_[k] <= 0.0) continue;
    double lp = std::log(weights_[k]);
    for (std::size_t c = 0; c < dim(); ++c) {
      const double z = (y[c] - means_[k][c]) * std::exp(-log_stds_[k][c]);
      lp += -0.5 * z * z - log_stds_[k][c] - half_log_2pi;
    }
    terms.push_back(lp);
  }
  const double hi = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return hi + std::log(s);
}

Point GaussianMixture::draw(Rng& rng) const {
  std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = pick(rng);
  Point y(dim());
  for (std::size_t c = 0; c < dim(); ++c) y[c] = means_[k][c] + std::exp(log_stds_[k][c]) * normal(rng);
  return y;
}

GmmFit em_fit_gmm(std::span<const Point> points, std::size_t k, std::size_t iters,
                  std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("em_fit_gmm: K must be positive");
  if (k > points.size()) {
    throw std::invalid_argument("em_fit_gmm: K = " + std::to_string(k) + " exceeds the " +
                                std::to_string(points.size()) + " available points");
  }
  const std::size_t n = points.size();
  const std::size_t d = points.front().size();

  // Global moments seed the variances.
  Point global_mean(d, 0.0), global_var(d, 0.0);
  for (const auto& p : points) {
    for (std::size_t c = 0; c < d; ++c) global_mean[c] += p[c] / static_cast<double>(n);
  }
  for (const auto& p : points) {
    for (std::size_t c = 0; c < d; ++c) {
      global_var[c] += (p[c] - global_mean[c]) * (p[c] - global_mean[c]) / static_cast<double>(n);
    }
  }

  // k-means++ seeding of the means.
  Rng rng(seed);
  std::vector<Point> means;
  means.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  while (means.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = euclidean_distance(points[i], means.back());
      closest[i] = std::min(closest[i], dist * dist);
      total += closest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= closest[pick];
        if (u < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    means.push_back(points[pick]);
  }

  std::vector<double> weights(k, 1.0 / static_cast<double>(k));
  std::vector<Point> vars(k, global_var);
  for (auto& v : vars) {
    for (double& x : v) x = std::max(x, kVarianceFloor);
  }

  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  std::vector<double> resp(n * k);
  std::vector<double> history;
  for (std::size_t it = 0; it < std::max<std::size_t>(iters, 1); ++it) {
    // E-step.
    double loglik = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        double lp = std::log(weights[j]);
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = points[i][c] - means[j][c];
          lp += -0.5 * diff * diff / vars[j][c] - 0.5 * std::log(vars[j][c]) - half_log_2pi;
        }
        resp[i * k + j] = lp;
        hi = std::max(hi, lp);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += std::exp(resp[i * k + j] - hi);
      const double lse = hi + std::log(s);
      loglik += lse;
      for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = std::exp(resp[i * k + j] - lse);
    }
    history.push_back(loglik);
    if (history.size() >= 2 && std::abs(history.back() - history[history.size() - 2]) <=
                                   1e-12 * std::max(1.0, std::abs(loglik))) {
      break;
    }

    // M-step.
    for (std::size_t j = 0; j < k; ++j) {
      double nk = 0.0;
      Point mu(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + j];
        for (std::size_t c = 0; c < d; ++c) mu[c] += resp[i * k + j] * points[i][c];
      }
      if (nk <= 1e-300) continue;  // empty component keeps its parameters
      for (double& v : mu) v /= nk;
      Point var(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = points[i][c] - mu[c];
          var[c] += resp[i * k + j] * diff * diff;
        }
      }
      for (double& v : var) v = std::max(v / nk, kVarianceFloor);
      weights[j] = nk / static_cast<double>(n);
      means[j] = std::move(mu);
      vars[j] = std::move(var);
    }
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    for (double& w : weights) w /= wsum;
  }

  std::vector<Point> log_stds(k, Point(d));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < d; ++c) log_stds[j][c] = 0.5 * std::log(vars[j][c]);
  }
  return GmmFit{GaussianMixture(SimplexVector(std::move(weights)), std::move(means), std::move(log_stds)),
                std::move(history)};
}

}  // namespace urcd
