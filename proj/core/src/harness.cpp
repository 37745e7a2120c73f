#include "urcd/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <locale>
#include <memory>
#include <sstream>
#include <utility>

namespace urcd {
namespace {

// Seed streams under the experiment seed.
constexpr std::uint64_t kDnmStream = 10;
constexpr std::uint64_t kRegressorStream = 11;
constexpr std::uint64_t kOracleStream = 20;
constexpr std::uint64_t kPredictionStream = 21;
constexpr std::uint64_t kTimingStream = 22;
constexpr std::uint64_t kBootstrapStream = 30;

constexpr double kReportZero = 1e-20;

const std::vector<std::string> kKnownModels{"dnm", "const", "mdn", "dgn", "mean", "oracle"};

double average(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::uint64_t hash_point(std::uint64_t seed, const Point& x) {
  std::uint64_t h = seed;
  for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Interval {
  double point, lo, hi;
};

Interval summarize_one(const std::vector<double>& train, const std::vector<double>& test, double level,
                       std::size_t resamples, std::uint64_t seed) {
  const bool use_test = !test.empty() && (train.empty() || average(test) > average(train));
  const std::vector<double>& split = use_test ? test : train;
  Interval out{average(split), 0.0, 0.0};
  if (split.size() >= 2) {
    const BcaInterval ci = bca_interval(split, level, resamples, seed);
    out.lo = ci.lo;
    out.hi = ci.hi;
  } else {
    out.lo = out.hi = out.point;
  }
  out.lo = std::min(out.lo, out.point);
  out.hi = std::max(out.hi, out.point);
  for (double* v : {&out.point, &out.lo, &out.hi}) {
    if (std::abs(*v) < kReportZero) *v = 0.0;
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string_view to_string(CenterStrategy s) {
  return s == CenterStrategy::exhaustive ? "exhaustive" : "greedy_medoids";
}

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

std::vector<EmpiricalMeasure> oracle_measures(const Dataset& data, const PointSampler& sampler,
                                              std::size_t samples, std::uint64_t seed) {
  std::vector<EmpiricalMeasure> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back(mc_oracle(sampler, data.entry(i).x, samples, derive_seed(seed, i)));
  }
  return out;
}

SplitErrors eval_model(const MeasurePredictor& predict, const Dataset& data,
                       std::span<const EmpiricalMeasure> oracle) {
  if (oracle.size() != data.size()) throw std::invalid_argument("eval_model: one oracle measure per entry required");
  auto fill = [&](const std::vector<std::size_t>& indices, PointErrors& out) {
    for (auto i : indices) {
      const EmpiricalMeasure pred = predict(data.entry(i).x);
      if (pred.dim() != oracle[i].dim()) {
        throw std::invalid_argument("eval_model: prediction dimension " + std::to_string(pred.dim()) +
                                    " does not match oracle dimension " + std::to_string(oracle[i].dim()));
      }
      out.w1.push_back(w1(pred, oracle[i]));
      out.m.push_back(euclidean_distance(mean(pred), mean(oracle[i])));
    }
  };
  SplitErrors errors;
  fill(data.train_indices(), errors.train);
  fill(data.test_indices(), errors.test);
  return errors;
}

SplitErrors eval_model(const MeasurePredictor& predict, const Dataset& data, const PointSampler& sampler,
                       std::size_t samples, std::uint64_t seed) {
  const auto oracle = oracle_measures(data, sampler, samples, seed);
  return eval_model(predict, data, oracle);
}

double worst_split_average(const std::vector<double>& train, const std::vector<double>& test) {
  if (train.empty() && test.empty()) throw std::invalid_argument("worst_split_average: both splits empty");
  if (train.empty()) return average(test);
  if (test.empty()) return average(train);
  return std::max(average(train), average(test));
}

Metrics summarize(const SplitErrors& errors, double level, std::size_t resamples, std::uint64_t seed) {
  const Interval w = summarize_one(errors.train.w1, errors.test.w1, level, resamples, derive_seed(seed, 0));
  const Interval m = summarize_one(errors.train.m, errors.test.m, level, resamples, derive_seed(seed, 1));
  Metrics out;
  out.w1 = w.point;
  out.w1_lo = w.lo;
  out.w1_hi = w.hi;
  out.m = m.point;
  out.m_lo = m.lo;
  out.m_hi = m.hi;
  return out;
}

const ReportRow* ExperimentReport::find(std::string_view model) const {
  for (const auto& r : rows) {
    if (r.model == model) return &r;
  }
  return nullptr;
}

void ExperimentConfig::validate() const {
  generator.validate();
  for (const auto& m : models) {
    if (std::find(kKnownModels.begin(), kKnownModels.end(), m) == kKnownModels.end()) {
      throw std::invalid_argument("unknown model '" + m + "' (expected one of " + join(kKnownModels) + ")");
    }
  }
  if (mdn_components == 0) throw std::invalid_argument("mdn_components must be positive");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  if (resamples < 100) throw std::invalid_argument("resamples must be >= 100");
}

std::string ExperimentConfig::snapshot() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "models = " << join(models) << '\n'
     << "n_atoms = " << dnm.n_atoms << '\n'
     << "hidden = " << join(dnm.hidden) << '\n'
     << "activation = " << to_string(dnm.activation) << '\n'
     << "epochs = " << dnm.epochs << '\n'
     << "batch_size = " << dnm.batch_size << '\n'
     << "lr = " << dnm.learning_rate << '\n'
     << "strategy = " << to_string(dnm.strategy) << '\n'
     << "baseline_hidden = " << join(regressor.hidden) << '\n'
     << "baseline_activation = " << to_string(regressor.activation) << '\n'
     << "baseline_epochs = " << regressor.epochs << '\n'
     << "baseline_lr = " << regressor.learning_rate << '\n'
     << "mdn_components = " << mdn_components << '\n'
     << "em_iters = " << em_iters << '\n'
     << "level = " << level << '\n'
     << "resamples = " << resamples << '\n'
     << "timings = " << (timings ? "true" : "false") << '\n';
  return os.str();
}

ExperimentReport run_experiment(ExperimentConfig cfg, std::uint64_t seed) {
  cfg.generator.seed = seed;
  cfg.dnm.seed = derive_seed(seed, kDnmStream);
  cfg.regressor.seed = derive_seed(seed, kRegressorStream);
  stage("config", [&] {
    cfg.validate();
    return 0;
  });

  ExperimentReport report;
  report.seed = seed;
  report.generator_description = cfg.generator.describe();
  report.config_snapshot = cfg.snapshot();
  if (cfg.models.empty()) return report;

  const GeneratedTask task = stage("generate", [&] { return generate(cfg.generator); });
  const Dataset& data = task.data;
  const std::size_t n_samples = cfg.generator.S;
  const std::uint64_t prediction_seed = derive_seed(seed, kPredictionStream);

  const auto oracle = stage("oracle", [&] {
    return oracle_measures(data, task.sampler, n_samples, derive_seed(seed, kOracleStream));
  });

  // Oracle test time: drawing a fresh measure at every test input.
  double oracle_test_time = 0.0;
  if (cfg.timings) {
    const auto start = Clock::now();
    for (auto i : data.test_indices()) {
      (void)mc_oracle(task.sampler, data.entry(i).x, n_samples, derive_seed(derive_seed(seed, kTimingStream), i));
    }
    oracle_test_time = seconds_since(start);
  }

  for (std::size_t row = 0; row < cfg.models.size(); ++row) {
    const std::string& name = cfg.models[row];
    ReportRow out{name, {}};
    if (name == "oracle") {
      if (cfg.timings) {
        out.metrics.train_time = 0.0;
        out.metrics.test_time_ratio = 1.0;
      }
      report.rows.push_back(std::move(out));
      continue;
    }

    MeasurePredictor predict;
    std::size_t n_par = 0;
    const auto train_start = Clock::now();
    stage("train:" + name, [&] {
      if (name == "dnm" || name == "const") {
        TrainConfig tc = cfg.dnm;
        if (name == "const") {
          tc.n_atoms = 1;
          tc.hidden.clear();
          tc.epochs = 1;
        }
        auto model = std::make_shared<const DnmModel>(train_dnm(data, tc).model);
        // Every prediction must be the mixture of the model's atoms.
        const Point& probe = data.entry(data.train_indices().front()).x;
        if (!same_measure(model->predict(probe), mixture(model->mixture_weights(probe), model->atoms()))) {
          throw std::logic_error("prediction outside the hull of the atoms");
        }
        n_par = model->parameter_count();
        predict = [model](const Point& x) { return model->predict(x); };
      } else if (name == "mdn") {
        auto model = std::make_shared<const MdnModel>(
            mdn_fit(data, cfg.mdn_components, cfg.regressor, cfg.em_iters));
        n_par = model->parameter_count();
        predict = [model, n_samples, prediction_seed](const Point& x) {
          return mdn_predict_measure(*model, x, n_samples, hash_point(prediction_seed, x));
        };
      } else if (name == "dgn") {
        auto model = std::make_shared<const DgnModel>(dgn_fit(data, cfg.regressor));
        n_par = model->parameter_count();
        predict = [model, n_samples, prediction_seed](const Point& x) {
          return model->predict_measure(x, n_samples, hash_point(prediction_seed, x));
        };
      } else {
        auto model = std::make_shared<const MeanModel>(mean_dnn_fit(data, cfg.regressor));
        n_par = model->parameter_count();
        predict = [model](const Point& x) { return model->predict_measure(x); };
      }
      return 0;
    });
    const double train_time = seconds_since(train_start);

    const SplitErrors errors = stage("evaluate:" + name, [&] { return eval_model(predict, data, oracle); });
    out.metrics = summarize(errors, cfg.level, cfg.resamples, derive_seed(derive_seed(seed, kBootstrapStream), row));
    out.metrics.n_par = n_par;

    if (cfg.timings) {
      const auto start = Clock::now();
      for (auto i : data.test_indices()) (void)predict(data.entry(i).x);
      const double test_time = seconds_since(start);
      out.metrics.train_time = train_time;
      out.metrics.test_time_ratio = oracle_test_time > 0.0 ? test_time / oracle_test_time : 0.0;
    }
    report.rows.push_back(std::move(out));
  }
  return report;
}

}  // namespace urcd
