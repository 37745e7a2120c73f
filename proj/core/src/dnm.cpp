#include "urcd/dnm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace urcd {

FeatureMap FeatureMap::identity(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("FeatureMap::identity: zero dimension");
  FeatureMap m;
  m.kind_ = Kind::identity;
  m.input_dim_ = dim;
  m.output_dim_ = dim;
  return m;
}

FeatureMap FeatureMap::affine(Eigen::MatrixXd a, Eigen::VectorXd b) {
  if (a.rows() == 0 || a.cols() == 0 || b.size() != a.rows()) {
    throw std::invalid_argument("FeatureMap::affine: inconsistent shapes");
  }
  if (a.rows() < a.cols()) throw std::invalid_argument("FeatureMap::affine: map cannot be injective");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  if (svd.singularValues().minCoeff() <= 1e-10) {
    throw std::invalid_argument("FeatureMap::affine: matrix is rank deficient (not injective)");
  }
  FeatureMap m;
  m.kind_ = Kind::affine;
  m.input_dim_ = static_cast<std::size_t>(a.cols());
  m.output_dim_ = static_cast<std::size_t>(a.rows());
  m.a_ = std::move(a);
  m.b_ = std::move(b);
  return m;
}

FeatureMap FeatureMap::table(std::vector<Point> inputs, std::vector<Point> features) {
  if (inputs.empty() || inputs.size() != features.size()) {
    throw std::invalid_argument("FeatureMap::table: need matching non-empty input/feature lists");
  }
  const std::size_t din = inputs.front().size();
  const std::size_t dout = features.front().size();
  std::set<Point> seen_in, seen_out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != din || features[i].size() != dout) {
      throw std::invalid_argument("FeatureMap::table: ragged entries");
    }
    if (!seen_in.insert(inputs[i]).second) throw std::invalid_argument("FeatureMap::table: duplicate input");
    if (!seen_out.insert(features[i]).second) {
      throw std::invalid_argument("FeatureMap::table: duplicate feature (map not injective)");
    }
  }
  FeatureMap m;
  m.kind_ = Kind::table;
  m.input_dim_ = din;
  m.output_dim_ = dout;
  m.table_in_ = std::move(inputs);
  m.table_out_ = std::move(features);
  return m;
}

Point FeatureMap::apply(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw std::invalid_argument("FeatureMap: input has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim_));
  }
  switch (kind_) {
    case Kind::identity:
      return Point(x.begin(), x.end());
    case Kind::affine: {
      const Eigen::VectorXd v =
          a_ * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) + b_;
      return Point(v.data(), v.data() + v.size());
    }
    case Kind::table: {
      for (std::size_t i = 0; i < table_in_.size(); ++i) {
        if (std::equal(x.begin(), x.end(), table_in_[i].begin())) return table_out_[i];
      }
      throw std::out_of_range("FeatureMap: input not present in lookup table");
    }
  }
  return {};
}

DnmModel::DnmModel(FeatureMap feature_map, Mlp classifier, std::vector<EmpiricalMeasure> atoms)
    : feature_map_(std::move(feature_map)),
      classifier_(std::move(classifier)),
      atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw std::invalid_argument("DnmModel: no atoms");
  if (classifier_.output_dim() != atoms_.size()) {
    throw std::invalid_argument("DnmModel: classifier has " +
                                std::to_string(classifier_.output_dim()) + " outputs but " +
                                std::to_string(atoms_.size()) + " atoms");
  }
  if (classifier_.input_dim() != feature_map_.output_dim()) {
    throw std::invalid_argument("DnmModel: classifier input dim does not match feature map");
  }
  for (const auto& a : atoms_) {
    if (a.dim() != atoms_.front().dim()) throw std::invalid_argument("DnmModel: atoms differ in dimension");
  }
}

SimplexVector DnmModel::mixture_weights(std::span<const double> x) const {
  const Point features = feature_map_.apply(x);
  const Eigen::VectorXd logits = classifier_.forward(features);
  return softmax(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())));
}

EmpiricalMeasure DnmModel::predict(std::span<const double> x) const {
  return mixture(mixture_weights(x), atoms_);
}

double covering_radius(std::span<const EmpiricalMeasure> atoms,
                       std::span<const EmpiricalMeasure> targets) {
  if (atoms.empty() || targets.empty()) throw std::invalid_argument("covering_radius: empty input");
  double radius = 0.0;
  for (const auto& t : targets) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& a : atoms) nearest = std::min(nearest, w1(a, t));
    radius = std::max(radius, nearest);
  }
  return radius;
}

namespace {

// Calls visit(beta) for every beta on the lattice {k / resolution} of the simplex.
void for_each_lattice_point(std::size_t parts, std::size_t resolution,
                            const std::function<void(const SimplexVector&)>& visit) {
  std::vector<std::size_t> counts(parts, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t slot, std::size_t remaining) {
    if (slot + 1 == parts) {
      counts[slot] = remaining;
      std::vector<double> beta(parts);
      for (std::size_t i = 0; i < parts; ++i) {
        beta[i] = static_cast<double>(counts[i]) / static_cast<double>(resolution);
      }
      visit(SimplexVector(std::move(beta)));
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[slot] = c;
      rec(slot + 1, remaining - c);
    }
  };
  rec(0, resolution);
}

}  // namespace

ProjectionSlack projection_slack(const DnmModel& model, std::span<const LabeledMeasure> targets,
                                 std::size_t grid_resolution) {
  if (model.atom_count() > 3) {
    throw std::invalid_argument("projection_slack: hull grid search supports at most 3 atoms, got " +
                                std::to_string(model.atom_count()));
  }
  if (grid_resolution == 0) throw std::invalid_argument("projection_slack: zero grid resolution");
  if (targets.empty()) throw std::invalid_argument("projection_slack: no targets");
  ProjectionSlack out;
  for (const auto& t : targets) {
    out.sup_error = std::max(out.sup_error, w1(model.predict(t.x), t.measure));
    double best = std::numeric_limits<double>::infinity();
    for_each_lattice_point(model.atom_count(), grid_resolution, [&](const SimplexVector& beta) {
      best = std::min(best, w1(mixture(beta, model.atoms()), t.measure));
    });
    out.sup_hull_dist = std::max(out.sup_hull_dist, best);
  }
  return out;
}

bool localization_contains(std::span<const Point> train_inputs, double delta, double eta,
                           const Point& x_bar, const Point& x) {
  if (!(delta >= 0.0)) throw std::invalid_argument("localization_contains: delta must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("localization_contains: eta must be > 0");
  if (std::find(train_inputs.begin(), train_inputs.end(), x_bar) == train_inputs.end()) {
    throw std::invalid_argument("localization_contains: anchor is not a training input");
  }
  for (const Point& p : train_inputs) {
    if (p.size() != x.size()) throw std::invalid_argument("localization_contains: dimension mismatch");
    if (std::isfinite(eta) && euclidean_distance(p, x_bar) > eta) continue;
    if (euclidean_distance(p, x) <= delta) return true;
  }
  return false;
}

}  // namespace urcd
