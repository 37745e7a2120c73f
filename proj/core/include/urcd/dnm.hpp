#pragma once

// Softmax-gated mixtures of fixed measures:
//   F(x) = sum_n softmax(f(phi(x)))_n mu_n
// together with the covering / projection diagnostics and the quantitative
// rate formulas that go with them.

#include <Eigen/Dense>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "urcd/measures.hpp"
#include "urcd/neural.hpp"

namespace urcd {

/// Injective feature map phi: R^d -> R^d'.
class FeatureMap {
 public:
  enum class Kind { identity, affine, table };

  static FeatureMap identity(std::size_t dim);
  /// x -> A x + b; A must have full column rank (smallest singular value > 1e-10).
  static FeatureMap affine(Eigen::MatrixXd a, Eigen::VectorXd b);
  /// Finite lookup table; features must be pairwise distinct.
  static FeatureMap table(std::vector<Point> inputs, std::vector<Point> features);

  Kind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  const Eigen::MatrixXd& matrix() const noexcept { return a_; }
  const Eigen::VectorXd& offset() const noexcept { return b_; }
  const std::vector<Point>& table_inputs() const noexcept { return table_in_; }
  const std::vector<Point>& table_features() const noexcept { return table_out_; }

  Point apply(std::span<const double> x) const;

 private:
  FeatureMap() = default;

  Kind kind_ = Kind::identity;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  std::vector<Point> table_in_;
  std::vector<Point> table_out_;
};

class DnmModel {
 public:
  DnmModel(FeatureMap feature_map, Mlp classifier, std::vector<EmpiricalMeasure> atoms);

  const FeatureMap& feature_map() const noexcept { return feature_map_; }
  const Mlp& classifier() const noexcept { return classifier_; }
  const std::vector<EmpiricalMeasure>& atoms() const noexcept { return atoms_; }
  std::size_t atom_count() const noexcept { return atoms_.size(); }
  std::size_t input_dim() const noexcept { return feature_map_.input_dim(); }
  std::size_t output_dim() const noexcept { return atoms_.front().dim(); }
  std::size_t parameter_count() const noexcept { return classifier_.parameter_count(); }

  /// softmax(f(phi(x))).
  SimplexVector mixture_weights(std::span<const double> x) const;
  EmpiricalMeasure predict(std::span<const double> x) const;

 private:
  FeatureMap feature_map_;
  Mlp classifier_;
  std::vector<EmpiricalMeasure> atoms_;
};

inline EmpiricalMeasure dnm_predict(const DnmModel& model, std::span<const double> x) {
  return model.predict(x);
}

/// Integral of f(., x) against the model's prediction at x.
template <typename F>
  requires std::invocable<F, const Point&, const Point&>
double conditional_expectation(const DnmModel& model, const Point& x, F&& f) {
  const SimplexVector beta = model.mixture_weights(x);
  double total = 0.0;
  for (std::size_t n = 0; n < model.atom_count(); ++n) {
    if (beta[n] == 0.0) continue;
    total += beta[n] * integrate(model.atoms()[n], [&](const Point& y) { return f(y, x); });
  }
  return total;
}

/// max over targets of min over atoms of W1.
double covering_radius(std::span<const EmpiricalMeasure> atoms,
                       std::span<const EmpiricalMeasure> targets);

struct LabeledMeasure {
  Point x;
  EmpiricalMeasure measure;
};

struct ProjectionSlack {
  double sup_error = 0.0;      // max_x W1(F(x), f(x))
  double sup_hull_dist = 0.0;  // max_x min_{beta on grid} W1(mixture(beta, atoms), f(x))
};

/// Grid search over the simplex lattice {beta : resolution * beta integral}.
/// Refuses models with more than three atoms.
ProjectionSlack projection_slack(const DnmModel& model, std::span<const LabeledMeasure> targets,
                                 std::size_t grid_resolution);

/// Hölder moduli omega_f(t) = A t^alpha and omega_phi(t) = B t^beta on a
/// compact input set of diameter `diam` in R^d.
struct RateParams {
  double A = 1.0;
  double alpha = 1.0;
  double B = 1.0;
  double beta = 1.0;
  double diam = 1.0;
  std::size_t d = 1;

  void validate() const;
};

/// Pre-ceiling value of the mixture-count bound N(eps).
double n_epsilon_bound(const RateParams& p, double eps);
std::uint64_t n_epsilon(const RateParams& p, double eps);

enum class LambertBranch { principal, minus_one };

/// Real branches of the inverse of u -> u e^u.
double lambert_w(LambertBranch branch, double x);

/// Pre-ceiling atom count of a uniform quantizer of the radius-M ball in R^D.
double n_quantizer_bound(double eps, std::size_t D, double M);
std::uint64_t n_quantizer(double eps, std::size_t D, double M);

inline constexpr double kNoRadius = std::numeric_limits<double>::infinity();

/// Whether x lies within delta of the training inputs that are within eta of
/// x_bar. eta = infinity ignores x_bar's neighbourhood.
bool localization_contains(std::span<const Point> train_inputs, double delta, double eta,
                           const Point& x_bar, const Point& x);

}  // namespace urcd
