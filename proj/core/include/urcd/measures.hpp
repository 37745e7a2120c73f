#pragma once

// Finitely supported probability measures on R^D and the Wasserstein-1
// distance between them.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "urcd/random.hpp"

namespace urcd {

using Point = std::vector<double>;

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kFeasibilityTolerance = 1e-8;

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Probability vector: entries in [0, 1], summing to one within kSimplexTolerance.
class SimplexVector {
 public:
  explicit SimplexVector(std::vector<double> weights);

  static SimplexVector uniform(std::size_t k);
  static SimplexVector one_hot(std::size_t k, std::size_t index);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const noexcept { return weights_; }
  auto begin() const noexcept { return weights_.begin(); }
  auto end() const noexcept { return weights_.end(); }

  /// Index of the largest entry (lowest index on ties).
  std::size_t argmax() const noexcept;

 private:
  std::vector<double> weights_;
};

/// Weighted atoms in R^D. Coincident atoms are kept as separate entries.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::vector<Point> atoms, SimplexVector weights);
  /// Uniform weights.
  explicit EmpiricalMeasure(std::vector<Point> atoms);

  static EmpiricalMeasure dirac(Point at);

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t dim() const noexcept { return atoms_.front().size(); }
  const std::vector<Point>& atoms() const noexcept { return atoms_; }
  const Point& atom(std::size_t i) const { return atoms_[i]; }
  const SimplexVector& weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  std::vector<Point> atoms_;
  SimplexVector weights_;
};

EmpiricalMeasure make_empirical(std::vector<Point> points,
                                std::optional<SimplexVector> weights = std::nullopt);

/// Equality as weighted multisets after merging coincident atoms and dropping
/// zero-weight ones; weights compared within `tol`.
bool same_measure(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double tol = 1e-12);

struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> coupling;  // row-major rows x cols
  double cost = 0.0;

  double at(std::size_t i, std::size_t j) const { return coupling[i * cols + j]; }
};

/// Exact W1 by network simplex on the complete bipartite atom graph.
TransportPlan w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// W1 on the line as the integral of |F_mu - F_nu|. Requires D = 1.
double w1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct SinkhornResult {
  double cost = 0.0;  // <pi, C>, entropy term excluded
  std::size_t iterations = 0;
  double marginal_error = 0.0;  // L1 violation of the row marginal
  bool converged = false;
};

/// Log-domain Sinkhorn with geometric annealing of the regularization down to
/// `reg`. Non-convergence is reported through `converged`.
SinkhornResult w1_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double reg,
                           std::size_t max_iters = 20000, double tol = 1e-4);

/// Exact W1, using the 1-D sweep when D = 1 and the network simplex otherwise.
double w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// sum_n beta_n * measures[n]; atoms whose mixture weight is zero are dropped.
EmpiricalMeasure mixture(const SimplexVector& beta, std::span<const EmpiricalMeasure> measures);

template <std::invocable<const Point&> G>
double integrate(const EmpiricalMeasure& mu, G&& g) {
  double total = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double value = static_cast<double>(g(mu.atom(j)));
    if (!std::isfinite(value)) {
      throw std::domain_error("integrate: integrand is not finite at atom " + std::to_string(j));
    }
    total += mu.weight(j) * value;
  }
  return total;
}

Point mean(const EmpiricalMeasure& mu);

/// k i.i.d. categorical draws of atoms.
std::vector<Point> sample(const EmpiricalMeasure& mu, std::size_t k, Rng& rng);

namespace diagnostics {
/// Number of transport-distance evaluations performed by this process.
std::uint64_t transport_evaluations() noexcept;
}  // namespace diagnostics

}  // namespace urcd
