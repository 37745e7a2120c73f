#pragma once

// Experiment orchestration: generate a task, fit the requested models,
// compare every prediction with a fresh Monte-Carlo oracle and summarise the
// per-point errors with BCa bootstrap intervals.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "urcd/baselines.hpp"
#include "urcd/datagen.hpp"
#include "urcd/measures.hpp"
#include "urcd/training.hpp"

namespace urcd {

struct BcaInterval {
  double lo = 0.0;
  double hi = 0.0;
  double z0 = 0.0;            // bias correction
  double acceleration = 0.0;  // jackknife acceleration
};

/// BCa interval for the mean of `samples`, B resamples driven by Rng(seed).
BcaInterval bca_interval(std::span<const double> samples, double level = 0.95, std::size_t resamples = 1000,
                         std::uint64_t seed = 0);

using MeasurePredictor = std::function<EmpiricalMeasure(const Point& x)>;

struct PointErrors {
  std::vector<double> w1;  // W1(prediction, oracle) per point
  std::vector<double> m;   // |mean(prediction) - mean(oracle)| per point
};

struct SplitErrors {
  PointErrors train;
  PointErrors test;
};

/// Oracle reference measure for every dataset entry (index i uses
/// derive_seed(seed, i)).
std::vector<EmpiricalMeasure> oracle_measures(const Dataset& data, const PointSampler& sampler,
                                              std::size_t samples, std::uint64_t seed);

SplitErrors eval_model(const MeasurePredictor& predict, const Dataset& data,
                       std::span<const EmpiricalMeasure> oracle);
SplitErrors eval_model(const MeasurePredictor& predict, const Dataset& data, const PointSampler& sampler,
                       std::size_t samples, std::uint64_t seed);

/// Average of the split with the larger average (empty splits ignored).
double worst_split_average(const std::vector<double>& train, const std::vector<double>& test);

struct Metrics {
  double w1 = 0.0, w1_lo = 0.0, w1_hi = 0.0;
  double m = 0.0, m_lo = 0.0, m_hi = 0.0;
  std::size_t n_par = 0;
  std::optional<double> train_time;       // seconds
  std::optional<double> test_time_ratio;  // relative to the oracle
};

/// Worst-split point values with BCa intervals from the same split; values
/// below 1e-20 become 0 and intervals are widened to contain the point value.
Metrics summarize(const SplitErrors& errors, double level, std::size_t resamples, std::uint64_t seed);

struct ReportRow {
  std::string model;
  Metrics metrics;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::string generator_description;
  std::string config_snapshot;
  std::uint64_t seed = 0;

  const ReportRow* find(std::string_view model) const;
};

/// Model tags: dnm, const (the N = 1 constant-measure model), mdn, dgn, mean,
/// oracle.
struct ExperimentConfig {
  GeneratorConfig generator;
  std::vector<std::string> models{"dnm", "mdn", "dgn", "mean", "oracle"};
  TrainConfig dnm;
  RegressorConfig regressor;
  std::size_t mdn_components = 3;
  std::size_t em_iters = 100;
  double level = 0.95;
  std::size_t resamples = 1000;
  bool timings = false;

  void validate() const;
  /// Flat "key = value" listing of every setting.
  std::string snapshot() const;
};

/// Carries the name of the stage that failed.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// cfg.generator.seed is overwritten by `seed`.
ExperimentReport run_experiment(ExperimentConfig cfg, std::uint64_t seed);

enum class ReportFormat { csv, json };

ReportFormat report_format_from_string(std::string_view name);
std::string emit_report(const ExperimentReport& report, ReportFormat format);
void write_report(const ExperimentReport& report, ReportFormat format, const std::string& path);
std::vector<ReportRow> parse_report_csv(std::string_view text);

inline constexpr const char* kReportColumns[] = {"model", "W1-95L", "W1", "W1-95R", "M-95L", "M",
                                                  "M-95R", "N_Par", "Train_Time", "Test_Time_Ratio"};

}  // namespace urcd
