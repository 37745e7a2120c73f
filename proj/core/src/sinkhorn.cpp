#include <algorithm>
#include <cmath>
#include <limits>

#include "urcd/measures.hpp"
#include "network_simplex.hpp"

namespace urcd {
namespace {

double log_sum_exp(const std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace

SinkhornResult w1_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double reg,
                           std::size_t max_iters, double tol) {
  if (!(reg > 0.0)) throw std::invalid_argument("w1_sinkhorn: reg must be positive");
  if (max_iters < 1) throw std::invalid_argument("w1_sinkhorn: max_iters must be at least 1");
  if (!(tol > 0.0)) throw std::invalid_argument("w1_sinkhorn: tol must be positive");
  if (mu.dim() != nu.dim()) throw std::invalid_argument("w1_sinkhorn: dimension mismatch");
  detail::count_transport_evaluation();

  const std::size_t k = mu.size();
  const std::size_t m = nu.size();
  std::vector<double> cost(k * m);
  double max_cost = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cost[i * m + j] = euclidean_distance(mu.atom(i), nu.atom(j));
      max_cost = std::max(max_cost, cost[i * m + j]);
    }
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_a(k), log_b(m);
  for (std::size_t i = 0; i < k; ++i) log_a[i] = mu.weight(i) > 0 ? std::log(mu.weight(i)) : kNegInf;
  for (std::size_t j = 0; j < m; ++j) log_b[j] = nu.weight(j) > 0 ? std::log(nu.weight(j)) : kNegInf;

  std::vector<double> f(k, 0.0), g(m, 0.0);
  std::vector<double> row(m), col(k);

  auto plan_entry = [&](std::size_t i, std::size_t j, double eps) {
    return std::exp((f[i] + g[j] - cost[i * m + j]) / eps);
  };
  auto row_violation = [&](double eps) {
    double err = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += plan_entry(i, j, eps);
      err += std::abs(s - mu.weight(i));
    }
    return err;
  };

  constexpr double kStageTolerance = 1e-3;
  SinkhornResult result;
  // Anneal the regularization geometrically, warm-starting the duals.
  double eps = std::max(reg, max_cost);
  bool reached_final = false;
  while (true) {
    const bool final_stage = eps <= reg;
    reached_final = final_stage;
    const std::size_t remaining = max_iters - result.iterations;
    const std::size_t budget = final_stage ? remaining : std::min<std::size_t>(200, remaining);
    for (std::size_t it = 0; it < budget; ++it) {
      for (std::size_t i = 0; i < k; ++i) {
        if (log_a[i] == kNegInf) {
          f[i] = kNegInf;
          continue;
        }
        for (std::size_t j = 0; j < m; ++j) row[j] = (g[j] - cost[i * m + j]) / eps;
        f[i] = eps * (log_a[i] - log_sum_exp(row));
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (log_b[j] == kNegInf) {
          g[j] = kNegInf;
          continue;
        }
        for (std::size_t i = 0; i < k; ++i) col[i] = (f[i] - cost[i * m + j]) / eps;
        g[j] = eps * (log_b[j] - log_sum_exp(col));
      }
      ++result.iterations;
      result.marginal_error = row_violation(eps);
      // Intermediate stages only warm-start the duals.
      if (result.marginal_error < (final_stage ? tol : std::max(tol, kStageTolerance))) break;
    }
    if (final_stage || result.iterations == max_iters) break;
    eps = std::max(reg, eps * 0.5);
  }

  result.converged = reached_final && result.marginal_error < tol;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (f[i] == kNegInf || g[j] == kNegInf) continue;
      result.cost += plan_entry(i, j, reg) * cost[i * m + j];
    }
  }
  return result;
}

}  // namespace urcd
