#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "urcd/measures.hpp"
#include "urcd/random.hpp"

namespace testing_support {

inline std::vector<double> random_weights(std::size_t k, urcd::Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(k);
  double s = 0.0;
  for (double& v : w) s += (v = u(rng));
  for (double& v : w) v /= s;
  return w;
}

// 1..max_atoms atoms with coordinates in [-2, 2] and random positive weights.
inline urcd::EmpiricalMeasure random_measure(urcd::Rng& rng, std::size_t max_atoms, std::size_t dim) {
  std::uniform_int_distribution<std::size_t> count(1, max_atoms);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  const std::size_t k = count(rng);
  std::vector<urcd::Point> atoms(k, urcd::Point(dim));
  for (auto& a : atoms) {
    for (double& v : a) v = coord(rng);
  }
  return urcd::EmpiricalMeasure(std::move(atoms), urcd::SimplexVector(random_weights(k, rng)));
}

// Atoms uniform in the closed unit ball, so every first moment is at most 1.
inline urcd::EmpiricalMeasure random_unit_ball_measure(urcd::Rng& rng, std::size_t max_atoms, std::size_t dim) {
  std::uniform_int_distribution<std::size_t> count(1, max_atoms);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t k = count(rng);
  std::vector<urcd::Point> atoms(k, urcd::Point(dim));
  for (auto& a : atoms) {
    double norm = 0.0;
    for (double& v : a) norm += (v = g(rng)) * v;
    const double r = std::pow(u(rng), 1.0 / static_cast<double>(dim)) / std::sqrt(norm);
    for (double& v : a) v *= r;
  }
  return urcd::EmpiricalMeasure(std::move(atoms), urcd::SimplexVector(random_weights(k, rng)));
}

}  // namespace testing_support
