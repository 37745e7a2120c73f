#include "urcd/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <locale>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace urcd {
namespace {

constexpr std::size_t kElmInputs = 11;
constexpr std::size_t kElmSeries = kElmInputs + 1;
constexpr double kTestBallRadius = 0.1;

// Seed streams under the master seed.
constexpr std::uint64_t kModelStream = 0;
constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kSeriesStream = 2;
constexpr std::uint64_t kEntryStream = 3;

std::uint64_t entry_seed(const GeneratorConfig& cfg, std::size_t i) {
  return derive_seed(derive_seed(cfg.seed, kEntryStream), i);
}

std::vector<std::size_t> network_dims(const GeneratorConfig& cfg) {
  std::vector<std::size_t> dims{cfg.d};
  for (std::size_t j = 0; j < cfg.depth; ++j) dims.push_back(cfg.width);
  dims.push_back(1);
  return dims;
}

template <class Dist>
Mlp random_network(const std::vector<std::size_t>& dims, Activation act, Dist dist, Rng& rng) {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (std::size_t j = 0; j + 1 < dims.size(); ++j) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(dims[j + 1]), static_cast<Eigen::Index>(dims[j]));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
    Eigen::VectorXd b(static_cast<Eigen::Index>(dims[j + 1]));
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = dist(rng);
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  return Mlp(dims, act, std::move(weights), std::move(biases));
}

std::vector<Point> unit_cube_points(std::size_t count, std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(count, Point(d));
  for (auto& p : pts) {
    for (double& v : p) v = u(rng);
  }
  return pts;
}

Dataset sample_dataset(const GeneratorConfig& cfg, std::vector<Point> train_x, std::vector<Point> test_x,
                       const PointSampler& sampler) {
  std::vector<DatasetEntry> entries;
  entries.reserve(train_x.size() + test_x.size());
  std::vector<std::size_t> train, test;
  for (auto& x : train_x) {
    train.push_back(entries.size());
    const std::uint64_t s = entry_seed(cfg, entries.size());
    entries.push_back({x, mc_oracle(sampler, x, cfg.S, s), s});
  }
  for (auto& x : test_x) {
    test.push_back(entries.size());
    const std::uint64_t s = entry_seed(cfg, entries.size());
    entries.push_back({x, mc_oracle(sampler, x, cfg.S, s), s});
  }
  return Dataset(std::move(entries), std::move(train), std::move(test));
}

// Training inputs in [0,1]^d plus test inputs around them.
GeneratedTask cube_task(const GeneratorConfig& cfg, PointSampler sampler) {
  Rng rng(derive_seed(cfg.seed, kInputStream));
  std::vector<Point> train_x = unit_cube_points(cfg.n, cfg.d, rng);
  std::vector<Point> test_x = ball_perturbations(train_x, cfg.n_test, kTestBallRadius, rng);
  Dataset data = sample_dataset(cfg, std::move(train_x), std::move(test_x), sampler);
  return GeneratedTask{std::move(data), std::move(sampler)};
}

PointSampler heteroscedastic_sampler(const GeneratorConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kModelStream));
  auto f = std::make_shared<const Mlp>(random_network(
      network_dims(cfg), Activation::relu, std::uniform_real_distribution<double>(-0.5, 0.5), rng));
  return [f](const Point& x, Rng& r) {
    double norm = 0.0;
    for (double v : x) norm += v * v;
    const double scale = std::sqrt(std::sqrt(norm) / 2.0);
    std::exponential_distribution<double> e(1.0);
    const double a = e(r);
    const double b = e(r);
    return Point{f->forward(x)(0) + scale * (a - b)};
  };
}

PointSampler mc_dropout_sampler(const GeneratorConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kModelStream));
  auto base = std::make_shared<const Mlp>(random_network(
      network_dims(cfg), Activation::identity, std::normal_distribution<double>(0.0, 1.0), rng));
  const double keep = 1.0 - cfg.dropout_rate;
  return [base, keep](const Point& x, Rng& r) {
    std::bernoulli_distribution mask(keep);
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < base->layers(); ++j) {
      Eigen::MatrixXd w = base->weight(j);
      for (Eigen::Index row = 0; row < w.rows(); ++row) {
        for (Eigen::Index col = 0; col < w.cols(); ++col) {
          if (!mask(r)) w(row, col) = 0.0;
        }
      }
      h = w * h + base->bias(j);
    }
    return Point{h(0)};
  };
}

struct ElmDesign {
  std::vector<Point> inputs;   // one row per day
  std::vector<double> target;  // next-day value of the last series
};

// Unit-variance AR(1) returns driven by one common and one idiosyncratic
// shock per series.
ElmDesign elm_design(const GeneratorConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kSeriesStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr double phi = 0.3;
  constexpr double loading = 0.6;
  const double innovation = std::sqrt(1.0 - phi * phi);
  const double idio = std::sqrt(1.0 - loading * loading);
  std::vector<Point> series;
  Point r(kElmSeries);
  for (double& v : r) v = normal(rng);
  for (std::size_t t = 0; t <= cfg.elm_rows; ++t) {
    const double common = normal(rng);
    for (double& v : r) v = phi * v + innovation * (loading * common + idio * normal(rng));
    series.push_back(r);
  }
  ElmDesign out;
  for (std::size_t t = 0; t < cfg.elm_rows; ++t) {
    out.inputs.emplace_back(series[t].begin(), series[t].begin() + kElmInputs);
    out.target.push_back(series[t + 1][kElmInputs]);
  }
  return out;
}

std::size_t elm_train_rows(const GeneratorConfig& cfg) {
  return static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(cfg.elm_rows) + 1e-9));
}

PointSampler elm_sampler(const GeneratorConfig& cfg) {
  const ElmDesign design = elm_design(cfg);
  const std::size_t n_train = elm_train_rows(cfg);
  auto x_train = std::make_shared<const Eigen::MatrixXd>(
      to_matrix(std::span<const Point>(design.inputs.data(), n_train)));  // columns are rows of X
  auto y_train = std::make_shared<const Eigen::VectorXd>(
      Eigen::Map<const Eigen::VectorXd>(design.target.data(), static_cast<Eigen::Index>(n_train)));
  const std::size_t width = cfg.elm_width;
  const std::size_t depth = cfg.elm_depth;
  const double bound = cfg.elm_bound;
  const double keep = 1.0 - cfg.elm_sparsity;
  const double lambda = cfg.elm_lambda;
  return [=](const Point& x, Rng& r) {
    std::uniform_real_distribution<double> u(-bound, bound);
    std::bernoulli_distribution mask(keep);
    auto param = [&] {
      const double v = u(r);
      return mask(r) ? v : 0.0;
    };
    const auto w = static_cast<Eigen::Index>(width);
    Eigen::MatrixXd features = *x_train;
    Eigen::VectorXd fx = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < depth; ++j) {
      Eigen::MatrixXd a(w, features.rows());
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) a(i, c) = param();
      }
      Eigen::VectorXd b(w);
      for (Eigen::Index i = 0; i < w; ++i) b(i) = param();
      features = ((a * features).colwise() + b).cwiseMax(0.0);
      fx = (a * fx + b).cwiseMax(0.0);
    }
    const Eigen::MatrixXd beta = ridge_solve(features.transpose(), *y_train, lambda);
    return Point{fx.dot(beta.col(0))};
  };
}

PointSampler sde_sampler(const GeneratorConfig& cfg) {
  return [cfg](const Point& input, Rng& r) {
    const Point x(input.begin() + 1, input.end());
    return euler_maruyama(cfg, input[0], x, r);
  };
}

std::vector<Point> sde_grid(const GeneratorConfig& cfg) {
  const std::size_t axes = cfg.d + 1;
  auto m = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(cfg.n), 1.0 / static_cast<double>(axes)) - 1e-9));
  m = std::max<std::size_t>(m, 1);
  std::size_t total = 1;
  for (std::size_t a = 0; a < axes; ++a) total *= m;
  auto tick = [&](std::size_t k, double lo, double hi) {
    return m == 1 ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(m - 1);
  };
  std::vector<Point> pts;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    std::size_t idx = static_cast<std::size_t>(static_cast<double>(i) * static_cast<double>(total) /
                                               static_cast<double>(cfg.n));
    Point p(axes);
    for (std::size_t a = axes; a-- > 0;) {
      const std::size_t k = idx % m;
      idx /= m;
      p[a] = a == 0 ? tick(k, 0.0, cfg.horizon) : tick(k, -cfg.horizon, cfg.horizon);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(Task t) noexcept {
  switch (t) {
    case Task::heteroscedastic: return "heteroscedastic";
    case Task::mc_dropout: return "mc-dropout";
    case Task::elm: return "elm";
    case Task::sde: return "sde";
  }
  return "unknown";
}

Task task_from_string(std::string_view name) {
  if (name == "heteroscedastic") return Task::heteroscedastic;
  if (name == "mc-dropout" || name == "mc_dropout") return Task::mc_dropout;
  if (name == "elm") return Task::elm;
  if (name == "sde") return Task::sde;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

void GeneratorConfig::validate() const {
  if (S < 2) throw std::invalid_argument("GeneratorConfig: S must be >= 2");
  switch (task) {
    case Task::heteroscedastic:
    case Task::mc_dropout:
      if (d == 0 || n < 2 || width == 0) {
        throw std::invalid_argument("GeneratorConfig: d, width must be positive and n >= 2");
      }
      if (D != 1) throw std::invalid_argument("GeneratorConfig: this task has D = 1");
      if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw std::invalid_argument("GeneratorConfig: dropout rate must lie in [0, 1)");
      }
      break;
    case Task::elm:
      if (elm_width == 0 || elm_depth == 0 || elm_rows < 5) {
        throw std::invalid_argument("GeneratorConfig: ELM width/depth must be positive and rows >= 5");
      }
      if (!(elm_lambda > 0.0)) throw std::invalid_argument("GeneratorConfig: ridge lambda must be > 0");
      if (!(elm_bound > 0.0)) throw std::invalid_argument("GeneratorConfig: ELM bound must be > 0");
      if (!(elm_sparsity >= 0.0 && elm_sparsity < 1.0)) {
        throw std::invalid_argument("GeneratorConfig: ELM sparsity must lie in [0, 1)");
      }
      break;
    case Task::sde:
      if (d == 0 || n < 2 || n_steps == 0) {
        throw std::invalid_argument("GeneratorConfig: d, n_steps must be positive and n >= 2");
      }
      if (!(horizon > 0.0)) throw std::invalid_argument("GeneratorConfig: horizon must be > 0");
      for (double c : {drift_a0, drift_a1, diffusion_s0, diffusion_s1}) {
        if (!std::isfinite(c)) throw std::invalid_argument("GeneratorConfig: non-finite SDE coefficient");
      }
      break;
  }
}

std::string GeneratorConfig::describe() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  auto line = [&](std::string_view key, const std::string& value) { os << key << " = " << value << '\n'; };
  line("task", std::string(to_string(task)));
  line("seed", std::to_string(seed));
  line("S", std::to_string(S));
  switch (task) {
    case Task::heteroscedastic:
    case Task::mc_dropout:
      line("d", std::to_string(d));
      line("D", "1");
      line("n", std::to_string(n));
      line("n_test", std::to_string(n_test));
      line("inputs", "uniform on [0,1]^d; test inputs uniform in radius-0.1 balls around training inputs");
      line("width", std::to_string(width));
      line("depth", std::to_string(depth));
      if (task == Task::heteroscedastic) {
        line("f", "relu network, weights and biases uniform on [-0.5, 0.5]");
        line("noise", "Laplace(0, sqrt(|x|/2)), variance |x|");
      } else {
        line("f", "linear network, weights and biases standard normal");
        line("dropout_rate", format_double(dropout_rate));
        line("mask", "every weight entry kept with probability 1 - dropout_rate; biases unmasked");
      }
      break;
    case Task::elm:
      line("d", std::to_string(kElmInputs));
      line("D", "1");
      line("rows", std::to_string(elm_rows));
      line("split", "first 80% train, remaining test");
      line("series", "12 unit-variance AR(1) returns, coefficient 0.3, common-shock loading 0.6");
      line("target", "next-day value of the 12th series");
      line("elm_width", std::to_string(elm_width));
      line("elm_depth", std::to_string(elm_depth));
      line("elm_lambda", format_double(elm_lambda));
      line("elm_bound", format_double(elm_bound));
      line("elm_sparsity", format_double(elm_sparsity));
      line("activation", "relu");
      break;
    case Task::sde:
      line("d", std::to_string(d + 1) + " (t, x)");
      line("D", std::to_string(d));
      line("n", std::to_string(n));
      line("n_test", std::to_string(n_test));
      line("inputs", "regular grid on [0,horizon] x [-horizon,horizon]^d; test inputs in radius-0.1 balls");
      line("horizon", format_double(horizon));
      line("drift", format_double(drift_a0) + " + " + format_double(drift_a1) + " * y");
      line("diffusion", format_double(diffusion_s0) + " + " + format_double(diffusion_s1) + " * y");
      line("scheme", "Euler-Maruyama");
      line("n_steps", std::to_string(n_steps));
      break;
  }
  return os.str();
}

std::vector<Point> ball_perturbations(std::span<const Point> anchors, std::size_t count, double radius,
                                      Rng& rng) {
  if (anchors.empty()) throw std::invalid_argument("ball_perturbations: no anchors");
  const std::size_t d = anchors.front().size();
  std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Point p = anchors[pick(rng)];
    Point dir(d);
    double norm = 0.0;
    for (double& v : dir) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double r = radius * std::pow(u(rng), 1.0 / static_cast<double>(d));
    if (norm > 0.0) {
      for (std::size_t c = 0; c < d; ++c) p[c] += r * dir[c] / norm;
    }
    out.push_back(std::move(p));
  }
  return out;
}

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge_solve: lambda must be > 0");
  if (x.rows() != y.rows()) throw std::invalid_argument("ridge_solve: row count mismatch");
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw std::runtime_error("ridge_solve: regularised Gram matrix not positive definite");
  return llt.solve(x.transpose() * y);
}

Point euler_maruyama(const GeneratorConfig& cfg, double t, const Point& x, Rng& rng) {
  if (!(t >= 0.0)) throw std::invalid_argument("euler_maruyama: t must be >= 0");
  const double dt = t / static_cast<double>(cfg.n_steps);
  const double sqrt_dt = std::sqrt(dt);
  std::normal_distribution<double> normal(0.0, 1.0);
  Point y = x;
  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    for (double& v : y) {
      const double dw = sqrt_dt * normal(rng);
      v += (cfg.drift_a0 + cfg.drift_a1 * v) * dt + (cfg.diffusion_s0 + cfg.diffusion_s1 * v) * dw;
    }
  }
  return y;
}

PointSampler true_sampler(const GeneratorConfig& cfg) {
  cfg.validate();
  switch (cfg.task) {
    case Task::heteroscedastic: return heteroscedastic_sampler(cfg);
    case Task::mc_dropout: return mc_dropout_sampler(cfg);
    case Task::elm: return elm_sampler(cfg);
    case Task::sde: return sde_sampler(cfg);
  }
  throw std::invalid_argument("true_sampler: unknown task");
}

GeneratedTask gen_heteroscedastic(const GeneratorConfig& cfg) {
  if (cfg.task != Task::heteroscedastic) throw std::invalid_argument("gen_heteroscedastic: wrong task tag");
  return cube_task(cfg, true_sampler(cfg));
}

GeneratedTask gen_mc_dropout(const GeneratorConfig& cfg) {
  if (cfg.task != Task::mc_dropout) throw std::invalid_argument("gen_mc_dropout: wrong task tag");
  return cube_task(cfg, true_sampler(cfg));
}

GeneratedTask gen_elm(const GeneratorConfig& cfg) {
  if (cfg.task != Task::elm) throw std::invalid_argument("gen_elm: wrong task tag");
  PointSampler sampler = true_sampler(cfg);
  ElmDesign design = elm_design(cfg);
  const std::size_t n_train = elm_train_rows(cfg);
  std::vector<Point> train_x(design.inputs.begin(), design.inputs.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Point> test_x(design.inputs.begin() + static_cast<std::ptrdiff_t>(n_train), design.inputs.end());
  Dataset data = sample_dataset(cfg, std::move(train_x), std::move(test_x), sampler);
  return GeneratedTask{std::move(data), std::move(sampler)};
}

GeneratedTask gen_sde_marginals(const GeneratorConfig& cfg) {
  if (cfg.task != Task::sde) throw std::invalid_argument("gen_sde_marginals: wrong task tag");
  PointSampler sampler = true_sampler(cfg);
  std::vector<Point> train_x = sde_grid(cfg);
  Rng rng(derive_seed(cfg.seed, kInputStream));
  std::vector<Point> test_x = ball_perturbations(train_x, cfg.n_test, kTestBallRadius, rng);
  for (auto& p : test_x) p[0] = std::max(p[0], 0.0);
  Dataset data = sample_dataset(cfg, std::move(train_x), std::move(test_x), sampler);
  return GeneratedTask{std::move(data), std::move(sampler)};
}

GeneratedTask generate(const GeneratorConfig& cfg) {
  switch (cfg.task) {
    case Task::heteroscedastic: return gen_heteroscedastic(cfg);
    case Task::mc_dropout: return gen_mc_dropout(cfg);
    case Task::elm: return gen_elm(cfg);
    case Task::sde: return gen_sde_marginals(cfg);
  }
  throw std::invalid_argument("generate: unknown task");
}

}  // namespace urcd
