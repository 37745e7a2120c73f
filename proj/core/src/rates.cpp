#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "urcd/dnm.hpp"

namespace urcd {
namespace {

// Ceiling that absorbs last-bit rounding: 16.000000000000004 -> 16.
std::uint64_t tolerant_ceil(double v) {
  if (!std::isfinite(v) || v >= 9.2e18) throw std::overflow_error("count exceeds 64-bit range");
  const double c = std::ceil(v * (1.0 - 1e-12));
  return c < 1.0 ? 1 : static_cast<std::uint64_t>(c);
}

double holder_inverse(double s, double scale, double exponent) {
  return std::pow(s / scale, 1.0 / exponent);
}

constexpr double kInvE = 1.0 / std::numbers::e;

// Series about the branch point -1/e in p = +-sqrt(2 (e x + 1)).
double branch_point_seed(double p) { return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p; }

}  // namespace

void RateParams::validate() const {
  if (!(A > 0.0) || !(B > 0.0)) throw std::invalid_argument("RateParams: A and B must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("RateParams: exponents must lie in (0, 1]");
  }
  if (!(diam >= 0.0)) throw std::invalid_argument("RateParams: diam must be >= 0");
  if (d == 0) throw std::invalid_argument("RateParams: d must be positive");
}

double n_epsilon_bound(const RateParams& p, double eps) {
  p.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("n_epsilon: eps must be positive");
  const double d = static_cast<double>(p.d);
  const double numerator = d * std::pow(2.0, 2.5) * p.B * std::pow(p.diam, p.beta);
  const double radius = holder_inverse(holder_inverse(eps / 4.0, p.A, p.alpha), p.B, p.beta);
  const double denominator = std::sqrt(d + 1.0) * radius;
  return std::pow(numerator / denominator, d);
}

std::uint64_t n_epsilon(const RateParams& p, double eps) { return tolerant_ceil(n_epsilon_bound(p, eps)); }

double lambert_w(LambertBranch branch, double x) {
  if (!std::isfinite(x)) throw std::domain_error("lambert_w: non-finite argument");
  if (x < -kInvE - 1e-15) {
    throw std::domain_error("lambert_w: argument " + std::to_string(x) + " below -1/e");
  }
  if (branch == LambertBranch::minus_one && x >= 0.0) {
    throw std::domain_error("lambert_w: W_{-1} is defined on [-1/e, 0)");
  }
  const double q = std::max(0.0, 2.0 * (std::numbers::e * x + 1.0));
  if (q == 0.0) return -1.0;

  double w = 0.0;
  if (branch == LambertBranch::principal) {
    if (x == 0.0) return 0.0;
    if (x < -0.32) {
      w = branch_point_seed(std::sqrt(q));
    } else if (x < 3.0) {
      const double l = std::log1p(x);
      w = l * (1.0 - std::log1p(l) / (2.0 + l));
    } else {
      const double l1 = std::log(x);
      const double l2 = std::log(l1);
      w = l1 - l2 + l2 / l1;
    }
  } else {
    if (x < -0.25) {
      w = branch_point_seed(-std::sqrt(q));
    } else {
      const double l1 = std::log(-x);
      const double l2 = std::log(-l1);
      w = l1 - l2 + l2 / l1;
    }
  }

  // Halley iteration on w e^w - x.
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (f == 0.0) break;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) break;
  }
  return w;
}

double n_quantizer_bound(double eps, std::size_t D, double M) {
  if (!(eps > 0.0)) throw std::invalid_argument("n_quantizer: eps must be positive");
  if (!(M > 0.0)) throw std::invalid_argument("n_quantizer: M must be positive");
  if (D == 0) throw std::invalid_argument("n_quantizer: D must be positive");
  const double dim = static_cast<double>(D);
  const double scale = 4.0 * M * std::sqrt(dim / (2.0 * (dim + 1.0)));
  const double quarter = eps / 4.0;
  if (D == 1) {
    const double arg = -std::numbers::e * quarter / scale;
    if (arg < -kInvE) {
      throw std::domain_error("n_quantizer: eps too large relative to M for D = 1 (Lambert argument " +
                              std::to_string(arg) + " < -1/e)");
    }
    return -(scale / quarter) * lambert_w(LambertBranch::minus_one, arg);
  }
  return std::pow(scale * dim / ((dim - 1.0) * quarter), dim);
}

std::uint64_t n_quantizer(double eps, std::size_t D, double M) {
  return tolerant_ceil(n_quantizer_bound(eps, D, M));
}

}  // namespace urcd
