#pragma once

// Synthetic measure-valued regression tasks. Every generator returns the
// dataset together with the true conditional sampler, so an oracle can draw
// fresh samples at any input.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>

#include "urcd/baselines.hpp"
#include "urcd/training.hpp"

namespace urcd {

enum class Task { heteroscedastic, mc_dropout, elm, sde };

std::string_view to_string(Task t) noexcept;
/// Accepts "mc-dropout" and "mc_dropout".
Task task_from_string(std::string_view name);

struct GeneratorConfig {
  Task task = Task::heteroscedastic;
  std::size_t d = 2;         // input dim (state dim for sde)
  std::size_t D = 1;         // output dim (fixed by heteroscedastic, mc_dropout, elm)
  std::size_t n = 100;       // training inputs
  std::size_t n_test = 100;  // test inputs drawn around the training inputs
  std::size_t S = 500;       // samples per input
  std::uint64_t seed = 0;

  // Ground-truth network of heteroscedastic / mc_dropout.
  std::size_t width = 5;
  std::size_t depth = 1;
  double dropout_rate = 0.1;

  // Extreme learning machine on a synthetic return series.
  std::size_t elm_width = 10;
  std::size_t elm_depth = 1;
  double elm_lambda = 1.0;
  double elm_bound = 1.0;     // hidden parameters uniform on [-bound, bound]
  double elm_sparsity = 0.75; // probability a hidden parameter is zeroed
  std::size_t elm_rows = 600;

  // SDE dy = (a0 + a1 y) dt + (s0 + s1 y) dW, componentwise.
  double drift_a0 = 0.0;
  double drift_a1 = -1.0;
  double diffusion_s0 = 1.0;
  double diffusion_s1 = 0.0;
  std::size_t n_steps = 200;
  double horizon = 1.0;       // inputs (t, x) in [0, horizon] x [-horizon, horizon]^d

  void validate() const;
  /// Exact parameterisation, one "key = value" per line.
  std::string describe() const;
};

struct GeneratedTask {
  Dataset data;
  PointSampler sampler;
};

/// Dispatches on cfg.task.
GeneratedTask generate(const GeneratorConfig& cfg);
/// The true sampler alone, rebuilt deterministically from cfg.
PointSampler true_sampler(const GeneratorConfig& cfg);

GeneratedTask gen_heteroscedastic(const GeneratorConfig& cfg);
GeneratedTask gen_mc_dropout(const GeneratorConfig& cfg);
GeneratedTask gen_elm(const GeneratorConfig& cfg);
GeneratedTask gen_sde_marginals(const GeneratorConfig& cfg);

/// One Euler-Maruyama path of the catalog SDE from x over [0, t].
Point euler_maruyama(const GeneratorConfig& cfg, double t, const Point& x, Rng& rng);

/// (X^T X + lambda I)^{-1} X^T Y.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda);

/// `count` points, each uniform in the radius-r ball around a uniformly
/// chosen anchor.
std::vector<Point> ball_perturbations(std::span<const Point> anchors, std::size_t count, double radius,
                                      Rng& rng);

}  // namespace urcd
