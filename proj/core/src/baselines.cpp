#include "urcd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace urcd {
namespace {

constexpr std::size_t kReferenceSampleCap = 4000;

Mlp make_net(std::size_t in, std::size_t out, const RegressorConfig& cfg) {
  if (cfg.epochs == 0) throw std::invalid_argument("RegressorConfig: epochs must be positive");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("RegressorConfig: learning rate must be positive");
  std::vector<std::size_t> dims{in};
  for (auto h : cfg.hidden) {
    if (h == 0) throw std::invalid_argument("RegressorConfig: hidden layer of width 0");
    dims.push_back(h);
  }
  dims.push_back(out);
  Rng rng(derive_seed(cfg.seed, 0));
  return Mlp(dims, cfg.activation, rng);
}

void fit_squared_error(Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       const RegressorConfig& cfg) {
  AdamState adam = AdamState::for_network(net, cfg.learning_rate);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam_step(net, adam, squared_error_grad(net, x, y).grads);
  }
}

Eigen::MatrixXd train_design(const Dataset& data) {
  return to_matrix(data.train_inputs());
}

std::vector<Point> pooled_train_samples(const Dataset& data) {
  std::vector<Point> pooled;
  for (auto i : data.train_indices()) {
    const auto& atoms = data.entry(i).target.atoms();
    pooled.insert(pooled.end(), atoms.begin(), atoms.end());
  }
  return pooled;
}

Point sample_mean(const EmpiricalMeasure& mu) { return mean(mu); }

Eigen::MatrixXd sample_covariance(const EmpiricalMeasure& mu) {
  const Point m = mean(mu);
  const auto d = static_cast<Eigen::Index>(mu.dim());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    Eigen::VectorXd diff(d);
    for (Eigen::Index c = 0; c < d; ++c) diff(c) = mu.atom(j)[static_cast<std::size_t>(c)] - m[static_cast<std::size_t>(c)];
    cov += mu.weight(j) * diff * diff.transpose();
  }
  return cov;
}

// Greedy nearest-mean pairing: slot r of the result holds the component of
// `fit` matched to reference component r.
std::vector<std::size_t> align_to_reference(const GaussianMixture& fit, const GaussianMixture& ref) {
  const std::size_t k = ref.components();
  struct Pair {
    double dist;
    std::size_t r, c;
  };
  std::vector<Pair> pairs;
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      pairs.push_back({euclidean_distance(ref.means()[r], fit.means()[c]), r, c});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });
  std::vector<std::size_t> slot(k, k);
  std::vector<char> used(k, 0);
  for (const auto& p : pairs) {
    if (slot[p.r] != k || used[p.c]) continue;
    slot[p.r] = p.c;
    used[p.c] = 1;
  }
  return slot;
}

}  // namespace

OutputScaling OutputScaling::fit(std::span<const Point> samples) {
  if (samples.empty()) throw std::invalid_argument("OutputScaling::fit: no samples");
  const std::size_t d = samples.front().size();
  const auto n = static_cast<double>(samples.size());
  OutputScaling s{Point(d, 0.0), Point(d, 0.0)};
  for (const auto& y : samples) {
    for (std::size_t c = 0; c < d; ++c) s.offset[c] += y[c] / n;
  }
  for (const auto& y : samples) {
    for (std::size_t c = 0; c < d; ++c) s.scale[c] += (y[c] - s.offset[c]) * (y[c] - s.offset[c]) / n;
  }
  for (double& v : s.scale) v = v > 1e-24 ? std::sqrt(v) : 1.0;
  return s;
}

// MDN ---------------------------------------------------------------------

MdnModel::MdnModel(Mlp net, std::size_t components, OutputScaling scaling)
    : net_(std::move(net)), k_(components), scaling_(std::move(scaling)) {
  const std::size_t d = scaling_.offset.size();
  if (k_ == 0 || d == 0 || scaling_.scale.size() != d) {
    throw std::invalid_argument("MdnModel: invalid component count or scaling");
  }
  if (net_.output_dim() != k_ * (1 + 2 * d)) {
    throw std::invalid_argument("MdnModel: network output dim " + std::to_string(net_.output_dim()) +
                                " does not match K * (1 + 2D) = " + std::to_string(k_ * (1 + 2 * d)));
  }
}

GaussianMixture MdnModel::predict_mixture(std::span<const double> x) const {
  const Eigen::VectorXd out = net_.forward(x);
  const std::size_t d = output_dim();
  const SimplexVector w = softmax(std::span<const double>(out.data(), k_));
  std::vector<Point> means(k_, Point(d)), log_stds(k_, Point(d));
  for (std::size_t k = 0; k < k_; ++k) {
    for (std::size_t c = 0; c < d; ++c) {
      const auto mi = static_cast<Eigen::Index>(k_ + k * d + c);
      const auto si = static_cast<Eigen::Index>(k_ + k_ * d + k * d + c);
      means[k][c] = scaling_.offset[c] + scaling_.scale[c] * out(mi);
      log_stds[k][c] = out(si) + std::log(scaling_.scale[c]);
    }
  }
  return GaussianMixture(w, std::move(means), std::move(log_stds));
}

MdnModel mdn_fit(const Dataset& data, std::size_t components, const RegressorConfig& cfg,
                 std::size_t em_iters) {
  const std::size_t k = components;
  const std::size_t d = data.output_dim();
  const auto& train = data.train_indices();
  Mlp net = make_net(data.input_dim(), k * (1 + 2 * d), cfg);

  const std::vector<Point> pooled = pooled_train_samples(data);
  const OutputScaling scaling = OutputScaling::fit(pooled);

  // Reference mixture fixing the component order of every per-input fit.
  std::vector<Point> ref_points;
  const std::size_t stride = std::max<std::size_t>(1, pooled.size() / kReferenceSampleCap);
  for (std::size_t i = 0; i < pooled.size(); i += stride) ref_points.push_back(pooled[i]);
  const GaussianMixture reference = em_fit_gmm(ref_points, k, em_iters, derive_seed(cfg.seed, 2)).mixture;

  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd weight_targets(static_cast<Eigen::Index>(k), n);
  Eigen::MatrixXd param_targets(static_cast<Eigen::Index>(2 * k * d), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& target = data.entry(train[static_cast<std::size_t>(i)]).target;
    const GaussianMixture fit =
        em_fit_gmm(target.atoms(), k, em_iters, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i)))
            .mixture;
    const auto slot = align_to_reference(fit, reference);
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t c = slot[r];
      weight_targets(static_cast<Eigen::Index>(r), i) = fit.weights()[c];
      for (std::size_t q = 0; q < d; ++q) {
        param_targets(static_cast<Eigen::Index>(r * d + q), i) =
            (fit.means()[c][q] - scaling.offset[q]) / scaling.scale[q];
        param_targets(static_cast<Eigen::Index>(k * d + r * d + q), i) =
            fit.log_stds()[c][q] - std::log(scaling.scale[q]);
      }
    }
  }

  // Cross-entropy on the logit head, squared error on the parameter heads.
  const Eigen::MatrixXd x = train_design(data);
  const auto kk = static_cast<Eigen::Index>(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  AdamState adam = AdamState::for_network(net, cfg.learning_rate);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const ForwardTrace trace = forward_trace(net, x);
    Eigen::MatrixXd grad(trace.output.rows(), trace.output.cols());
    grad.topRows(kk) = (softmax_columns(trace.output.topRows(kk)) - weight_targets) * inv_n;
    grad.bottomRows(param_targets.rows()) = (trace.output.bottomRows(param_targets.rows()) - param_targets) * inv_n;
    adam_step(net, adam, backward(net, trace, grad));
  }
  return MdnModel(std::move(net), k, scaling);
}

EmpiricalMeasure mdn_predict_measure(const MdnModel& model, std::span<const double> x,
                                     std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mdn_predict_measure: n_samples must be >= 1");
  const GaussianMixture mix = model.predict_mixture(x);
  Rng rng(seed);
  std::vector<Point> draws;
  draws.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) draws.push_back(mix.draw(rng));
  return EmpiricalMeasure(std::move(draws));
}

// DGN ---------------------------------------------------------------------

DgnModel::DgnModel(Mlp net, OutputScaling scaling) : net_(std::move(net)), scaling_(std::move(scaling)) {
  const std::size_t d = scaling_.offset.size();
  if (d == 0 || scaling_.scale.size() != d || net_.output_dim() != d + d * d) {
    throw std::invalid_argument("DgnModel: network output dim must be D + D*D");
  }
}

GaussianPrediction DgnModel::predict(std::span<const double> x) const {
  const Eigen::VectorXd out = net_.forward(x);
  const auto d = static_cast<Eigen::Index>(output_dim());
  GaussianPrediction p{Eigen::VectorXd(d), Eigen::MatrixXd(d, d)};
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    p.mean(c) = scaling_.offset[cs] + scaling_.scale[cs] * out(c);
    for (Eigen::Index j = 0; j < d; ++j) p.factor(c, j) = scaling_.scale[cs] * out(d + c * d + j);
  }
  return p;
}

EmpiricalMeasure DgnModel::predict_measure(std::span<const double> x, std::size_t n_samples,
                                           std::uint64_t seed) const {
  if (n_samples < 1) throw std::invalid_argument("DgnModel::predict_measure: n_samples must be >= 1");
  const GaussianPrediction p = predict(x);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Point> draws;
  draws.reserve(n_samples);
  Eigen::VectorXd z(p.mean.size());
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (Eigen::Index c = 0; c < z.size(); ++c) z(c) = normal(rng);
    const Eigen::VectorXd y = p.mean + p.factor * z;
    draws.emplace_back(y.data(), y.data() + y.size());
  }
  return EmpiricalMeasure(std::move(draws));
}

DgnModel dgn_fit(const Dataset& data, const RegressorConfig& cfg) {
  const std::size_t d = data.output_dim();
  const auto dd = static_cast<Eigen::Index>(d);
  const auto& train = data.train_indices();
  Mlp net = make_net(data.input_dim(), d + d * d, cfg);
  const OutputScaling scaling = OutputScaling::fit(pooled_train_samples(data));
  const Eigen::VectorXd inv_scale =
      Eigen::Map<const Eigen::VectorXd>(scaling.scale.data(), dd).cwiseInverse();

  Eigen::MatrixXd y(dd + dd * dd, static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& target = data.entry(train[i]).target;
    const Point m = sample_mean(target);
    const Eigen::MatrixXd cov =
        inv_scale.asDiagonal() * sample_covariance(target) * inv_scale.asDiagonal();
    const Eigen::MatrixXd lower =
        Eigen::LLT<Eigen::MatrixXd>(cov + 1e-9 * Eigen::MatrixXd::Identity(dd, dd)).matrixL();
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index c = 0; c < dd; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      y(c, col) = (m[cs] - scaling.offset[cs]) / scaling.scale[cs];
      for (Eigen::Index j = 0; j < dd; ++j) y(dd + c * dd + j, col) = lower(c, j);
    }
  }
  fit_squared_error(net, train_design(data), y, cfg);
  return DgnModel(std::move(net), scaling);
}

// Mean regressor ----------------------------------------------------------

MeanModel::MeanModel(Mlp net, OutputScaling scaling) : net_(std::move(net)), scaling_(std::move(scaling)) {
  if (scaling_.offset.empty() || net_.output_dim() != scaling_.offset.size()) {
    throw std::invalid_argument("MeanModel: network output dim must equal D");
  }
}

Point MeanModel::predict_mean(std::span<const double> x) const {
  const Eigen::VectorXd out = net_.forward(x);
  Point m(out.size());
  for (std::size_t c = 0; c < m.size(); ++c) {
    m[c] = scaling_.offset[c] + scaling_.scale[c] * out(static_cast<Eigen::Index>(c));
  }
  return m;
}

MeanModel mean_dnn_fit(const Dataset& data, const RegressorConfig& cfg) {
  const std::size_t d = data.output_dim();
  const auto& train = data.train_indices();
  Mlp net = make_net(data.input_dim(), d, cfg);
  std::vector<Point> means;
  for (auto i : train) means.push_back(sample_mean(data.entry(i).target));
  const OutputScaling scaling = OutputScaling::fit(pooled_train_samples(data));
  Eigen::MatrixXd y(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      y(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) =
          (means[i][c] - scaling.offset[c]) / scaling.scale[c];
    }
  }
  fit_squared_error(net, train_design(data), y, cfg);
  return MeanModel(std::move(net), scaling);
}

EmpiricalMeasure mc_oracle(const PointSampler& sampler, const Point& x, std::size_t samples,
                           std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("mc_oracle: S must be >= 1");
  Rng rng(seed);
  std::vector<Point> draws;
  draws.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) draws.push_back(sampler(x, rng));
  return EmpiricalMeasure(std::move(draws));
}

}  // namespace urcd
