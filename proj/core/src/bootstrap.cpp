#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "urcd/harness.hpp"

namespace urcd {
namespace {

double average(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Empirical quantile of sorted data with linear interpolation.
double quantile(const std::vector<double>& sorted, double p) {
  p = std::clamp(p, 0.0, 1.0);
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BcaInterval bca_interval(std::span<const double> samples, double level, std::size_t resamples,
                         std::uint64_t seed) {
  if (samples.size() < 2) throw std::invalid_argument("bca_interval: need at least 2 samples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bca_interval: level must lie in (0, 1)");
  if (resamples < 100) throw std::invalid_argument("bca_interval: need at least 100 resamples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("bca_interval: non-finite sample");
  }

  const double theta = average(samples);
  if (std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples.front(); })) {
    return BcaInterval{samples.front(), samples.front(), 0.0, 0.0};
  }

  const std::size_t n = samples.size();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> boot(resamples);
  for (auto& b : boot) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += samples[pick(rng)];
    b = s / static_cast<double>(n);
  }
  std::sort(boot.begin(), boot.end());

  const boost::math::normal_distribution<double> normal;
  // Proportion below the estimate, ties counted half, kept off 0 and 1.
  double below = 0.0;
  for (double b : boot) below += b < theta ? 1.0 : (b == theta ? 0.5 : 0.0);
  const double half_step = 0.5 / static_cast<double>(resamples);
  const double prop = std::clamp(below / static_cast<double>(resamples), half_step, 1.0 - half_step);
  const double z0 = boost::math::quantile(normal, prop);

  // Jackknife acceleration.
  const double total = theta * static_cast<double>(n);
  std::vector<double> jack(n);
  for (std::size_t i = 0; i < n; ++i) jack[i] = (total - samples[i]) / static_cast<double>(n - 1);
  const double jack_mean = average(jack);
  double num = 0.0, den = 0.0;
  for (double j : jack) {
    const double diff = jack_mean - j;
    num += diff * diff * diff;
    den += diff * diff;
  }
  const double accel = den > 0.0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;

  auto adjusted = [&](double alpha) {
    const double z = boost::math::quantile(normal, alpha);
    const double shifted = z0 + (z0 + z) / (1.0 - accel * (z0 + z));
    return boost::math::cdf(normal, shifted);
  };
  const double tail = 0.5 * (1.0 - level);
  return BcaInterval{quantile(boot, adjusted(tail)), quantile(boot, adjusted(1.0 - tail)), z0, accel};
}

}  // namespace urcd
