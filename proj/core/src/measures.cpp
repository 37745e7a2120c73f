#include "urcd/measures.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <utility>

#include "network_simplex.hpp"

namespace urcd {
namespace {

std::atomic<std::uint64_t> g_transport_evaluations{0};

void require_same_dim(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const char* who) {
  if (mu.dim() != nu.dim()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (" +
                                std::to_string(mu.dim()) + " vs " + std::to_string(nu.dim()) +
                                ")");
  }
}

// Positive-weight atoms with weights rescaled to sum exactly to one.
struct Support {
  std::vector<std::size_t> index;
  std::vector<double> mass;
};

Support positive_support(const EmpiricalMeasure& mu) {
  Support s;
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) > 0.0) {
      s.index.push_back(i);
      s.mass.push_back(mu.weight(i));
      total += mu.weight(i);
    }
  }
  for (double& w : s.mass) w /= total;
  return s;
}

}  // namespace

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

SimplexVector::SimplexVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("SimplexVector: empty weight vector");
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < -kSimplexTolerance || w > 1.0 + kSimplexTolerance) {
      throw std::invalid_argument("SimplexVector: weight outside [0, 1]: " + std::to_string(w));
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("SimplexVector: weights sum to " + std::to_string(total));
  }
}

SimplexVector SimplexVector::uniform(std::size_t k) {
  if (k == 0) throw std::invalid_argument("SimplexVector::uniform: k must be positive");
  return SimplexVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

SimplexVector SimplexVector::one_hot(std::size_t k, std::size_t index) {
  if (index >= k) throw std::invalid_argument("SimplexVector::one_hot: index out of range");
  std::vector<double> w(k, 0.0);
  w[index] = 1.0;
  return SimplexVector(std::move(w));
}

std::size_t SimplexVector::argmax() const noexcept {
  return static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) -
                                  weights_.begin());
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<Point> atoms, SimplexVector weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw std::invalid_argument("EmpiricalMeasure: no atoms");
  if (weights_.size() != atoms_.size()) {
    throw std::invalid_argument("EmpiricalMeasure: " + std::to_string(atoms_.size()) +
                                " atoms but " + std::to_string(weights_.size()) + " weights");
  }
  const std::size_t d = atoms_.front().size();
  if (d == 0) throw std::invalid_argument("EmpiricalMeasure: zero-dimensional atoms");
  for (const Point& p : atoms_) {
    if (p.size() != d) throw std::invalid_argument("EmpiricalMeasure: dimension mismatch");
    for (double c : p) {
      if (!std::isfinite(c)) throw std::invalid_argument("EmpiricalMeasure: non-finite coordinate");
    }
  }
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<Point> atoms)
    : EmpiricalMeasure(atoms, SimplexVector::uniform(atoms.empty() ? 1 : atoms.size())) {}

EmpiricalMeasure EmpiricalMeasure::dirac(Point at) {
  return EmpiricalMeasure(std::vector<Point>{std::move(at)}, SimplexVector::one_hot(1, 0));
}

EmpiricalMeasure make_empirical(std::vector<Point> points, std::optional<SimplexVector> weights) {
  if (points.empty()) throw std::invalid_argument("make_empirical: empty point list");
  if (weights) return EmpiricalMeasure(std::move(points), std::move(*weights));
  return EmpiricalMeasure(std::move(points));
}

bool same_measure(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double tol) {
  if (mu.dim() != nu.dim()) return false;
  auto merged = [](const EmpiricalMeasure& m) {
    std::vector<std::pair<Point, double>> entries;
    for (std::size_t i = 0; i < m.size(); ++i) entries.emplace_back(m.atom(i), m.weight(i));
    std::sort(entries.begin(), entries.end());
    std::vector<std::pair<Point, double>> out;
    for (auto& e : entries) {
      if (!out.empty() && out.back().first == e.first) {
        out.back().second += e.second;
      } else {
        out.push_back(std::move(e));
      }
    }
    std::erase_if(out, [](const auto& e) { return e.second <= 0.0; });
    return out;
  };
  const auto a = merged(mu);
  const auto b = merged(nu);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first || std::abs(a[i].second - b[i].second) > tol) return false;
  }
  return true;
}

TransportPlan w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require_same_dim(mu, nu, "w1_exact");
  detail::count_transport_evaluation();

  const Support a = positive_support(mu);
  const Support b = positive_support(nu);
  std::vector<double> cost(a.index.size() * b.index.size());
  for (std::size_t i = 0; i < a.index.size(); ++i) {
    for (std::size_t j = 0; j < b.index.size(); ++j) {
      cost[i * b.index.size() + j] = euclidean_distance(mu.atom(a.index[i]), nu.atom(b.index[j]));
    }
  }
  const std::vector<double> flow = detail::solve_transportation(a.mass, b.mass, cost);

  TransportPlan plan;
  plan.rows = mu.size();
  plan.cols = nu.size();
  plan.coupling.assign(plan.rows * plan.cols, 0.0);
  for (std::size_t i = 0; i < a.index.size(); ++i) {
    for (std::size_t j = 0; j < b.index.size(); ++j) {
      const double f = flow[i * b.index.size() + j];
      if (f == 0.0) continue;
      plan.coupling[a.index[i] * plan.cols + b.index[j]] = f;
      plan.cost += f * cost[i * b.index.size() + j];
    }
  }
  return plan;
}

double w1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw std::invalid_argument("w1_1d: measures must be 1-D");
  detail::count_transport_evaluation();

  const Support a = positive_support(mu);
  const Support b = positive_support(nu);
  // (position, signed mass): +mass from mu, -mass from nu.
  std::vector<std::pair<double, double>> events;
  events.reserve(a.index.size() + b.index.size());
  for (std::size_t i = 0; i < a.index.size(); ++i) events.emplace_back(mu.atom(a.index[i])[0], a.mass[i]);
  for (std::size_t j = 0; j < b.index.size(); ++j) events.emplace_back(nu.atom(b.index[j])[0], -b.mass[j]);
  std::sort(events.begin(), events.end());

  double gap = 0.0;  // F_mu - F_nu just right of the current breakpoint
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < events.size(); ++e) {
    gap += events[e].second;
    total += std::abs(gap) * (events[e + 1].first - events[e].first);
  }
  return total;
}

double w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require_same_dim(mu, nu, "w1");
  if (mu.dim() == 1) return w1_1d(mu, nu);
  return w1_exact(mu, nu).cost;
}

EmpiricalMeasure mixture(const SimplexVector& beta, std::span<const EmpiricalMeasure> measures) {
  if (beta.size() != measures.size()) {
    throw std::invalid_argument("mixture: " + std::to_string(beta.size()) + " weights for " +
                                std::to_string(measures.size()) + " measures");
  }
  const std::size_t d = measures.front().dim();
  std::vector<Point> atoms;
  std::vector<double> weights;
  for (std::size_t n = 0; n < measures.size(); ++n) {
    if (measures[n].dim() != d) throw std::invalid_argument("mixture: dimension mismatch");
    if (beta[n] <= 0.0) continue;
    for (std::size_t j = 0; j < measures[n].size(); ++j) {
      const double w = beta[n] * measures[n].weight(j);
      if (w <= 0.0) continue;
      atoms.push_back(measures[n].atom(j));
      weights.push_back(w);
    }
  }
  return EmpiricalMeasure(std::move(atoms), SimplexVector(std::move(weights)));
}

Point mean(const EmpiricalMeasure& mu) {
  Point m(mu.dim(), 0.0);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    for (std::size_t c = 0; c < m.size(); ++c) m[c] += mu.weight(j) * mu.atom(j)[c];
  }
  return m;
}

std::vector<Point> sample(const EmpiricalMeasure& mu, std::size_t k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample: k must be at least 1");
  std::vector<double> cdf(mu.size());
  std::partial_sum(mu.weights().begin(), mu.weights().end(), cdf.begin());
  std::uniform_real_distribution<double> unit(0.0, cdf.back());
  std::vector<Point> out;
  out.reserve(k);
  for (std::size_t s = 0; s < k; ++s) {
    const double u = unit(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), mu.size() - 1);
    out.push_back(mu.atom(idx));
  }
  return out;
}

void detail::count_transport_evaluation() noexcept {
  g_transport_evaluations.fetch_add(1, std::memory_order_relaxed);
}

namespace diagnostics {
std::uint64_t transport_evaluations() noexcept {
  return g_transport_evaluations.load(std::memory_order_relaxed);
}
}  // namespace diagnostics

}  // namespace urcd
