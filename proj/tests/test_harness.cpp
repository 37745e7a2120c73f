#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "urcd/harness.hpp"

using namespace urcd;

namespace {

ExperimentConfig mini_config() {
  ExperimentConfig cfg;
  cfg.generator.task = Task::heteroscedastic;
  cfg.generator.n = 20;
  cfg.generator.n_test = 10;
  cfg.generator.S = 40;
  cfg.dnm.n_atoms = 3;
  cfg.dnm.hidden = {8};
  cfg.dnm.epochs = 20;
  cfg.regressor.hidden = {8};
  cfg.regressor.epochs = 20;
  cfg.mdn_components = 2;
  cfg.em_iters = 10;
  cfg.resamples = 200;
  cfg.models = {"dnm", "const", "mdn", "dgn", "mean", "oracle"};
  return cfg;
}

Dataset tiny_dataset() {
  std::vector<DatasetEntry> entries;
  for (int i = 0; i < 5; ++i) entries.push_back({{double(i)}, EmpiricalMeasure::dirac({0.0}), 0});
  return Dataset(std::move(entries), {0, 1, 2}, {3, 4});
}

}  // namespace

TEST(Bca, ConstantSamples) {
  const std::vector<double> c(30, 2.5);
  const auto ci = bca_interval(c, 0.95, 500, 1);
  EXPECT_EQ(ci.lo, 2.5);
  EXPECT_EQ(ci.hi, 2.5);
}

TEST(Bca, SymmetricDataHasSmallBias) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(10000);
  for (double& x : v) x = u(rng);
  const auto ci = bca_interval(v, 0.95, 1000, 2);
  EXPECT_LT(std::abs(ci.z0), 0.1);
  EXPECT_LT(ci.lo, ci.hi);
}

TEST(Bca, CoverageOnStandardNormal) {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  int covered = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(100);
    for (double& x : v) x = n(rng);
    const auto ci = bca_interval(v, 0.95, 1000, 1000 + trial);
    if (ci.lo <= 0.0 && 0.0 <= ci.hi) ++covered;
  }
  EXPECT_GE(covered, 180);
}

TEST(Bca, RejectsBadArguments) {
  const std::vector<double> one{1.0};
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(bca_interval(one), std::invalid_argument);
  EXPECT_THROW(bca_interval(two, 1.0), std::invalid_argument);
  EXPECT_THROW(bca_interval(two, 0.95, 50), std::invalid_argument);
}

TEST(Bca, DeterministicPerSeed) {
  const std::vector<double> v{0.1, 0.5, 0.2, 0.9, 0.4, 0.3};
  const auto a = bca_interval(v, 0.9, 300, 4), b = bca_interval(v, 0.9, 300, 4);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
}

TEST(EvalModel, OraclePredictorHasZeroError) {
  const auto data = tiny_dataset();
  std::vector<EmpiricalMeasure> oracle;
  for (std::size_t i = 0; i < data.size(); ++i) oracle.push_back(EmpiricalMeasure({{double(i)}, {double(i) + 2.0}}));
  const auto errors = eval_model([&](const Point& x) { return oracle[std::size_t(x[0])]; }, data, oracle);
  for (double v : errors.train.w1) EXPECT_EQ(v, 0.0);
  for (double v : errors.test.m) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(errors.train.w1.size(), 3u);
  EXPECT_EQ(errors.test.w1.size(), 2u);
}

TEST(EvalModel, DiracAtOracleMean) {
  const auto data = tiny_dataset();
  // Oracle uniform{0, 2}; Dirac at 1 moves each half-mass a distance 1.
  const std::vector<EmpiricalMeasure> oracle(data.size(), EmpiricalMeasure({{0.0}, {2.0}}));
  const auto errors = eval_model([](const Point&) { return EmpiricalMeasure::dirac({1.0}); }, data, oracle);
  for (double v : errors.train.w1) EXPECT_NEAR(v, 1.0, 1e-12);
  for (double v : errors.train.m) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(EvalModel, DimensionMismatchThrows) {
  const auto data = tiny_dataset();
  const std::vector<EmpiricalMeasure> oracle(data.size(), EmpiricalMeasure::dirac({0.0}));
  EXPECT_THROW(eval_model([](const Point&) { return EmpiricalMeasure::dirac({0.0, 1.0}); }, data, oracle),
               std::invalid_argument);
}

TEST(WorstSplit, DominatesEachAverage) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(7), b(4);
    for (double& x : a) x = u(rng);
    for (double& x : b) x = u(rng);
    const double w = worst_split_average(a, b);
    EXPECT_GE(w, std::accumulate(a.begin(), a.end(), 0.0) / 7.0 - 1e-15);
    EXPECT_GE(w, std::accumulate(b.begin(), b.end(), 0.0) / 4.0 - 1e-15);
  }
  EXPECT_DOUBLE_EQ(worst_split_average({1.0, 3.0}, {}), 2.0);
}

TEST(Summarize, IntervalsContainPointAndTinyValuesVanish) {
  SplitErrors e;
  e.train.w1 = {1e-25, 2e-25, 1e-25};
  e.test.w1 = {3e-25, 1e-25};
  e.train.m = {0.1, 0.5, 0.3};
  e.test.m = {0.9, 0.8};
  const auto m = summarize(e, 0.95, 500, 1);
  EXPECT_EQ(m.w1, 0.0);
  EXPECT_EQ(m.w1_lo, 0.0);
  EXPECT_EQ(m.w1_hi, 0.0);
  EXPECT_NEAR(m.m, 0.85, 1e-15);
  EXPECT_LE(m.m_lo, m.m);
  EXPECT_GE(m.m_hi, m.m);
}

TEST(RunExperiment, OracleOnly) {
  auto cfg = mini_config();
  cfg.models = {"oracle"};
  const auto report = run_experiment(cfg, 1);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].model, "oracle");
  EXPECT_EQ(report.rows[0].metrics.w1, 0.0);
}

TEST(RunExperiment, SingleAtomDnmMatchesConstantModel) {
  auto cfg = mini_config();
  cfg.dnm.n_atoms = 1;
  cfg.models = {"dnm", "const"};
  const auto report = run_experiment(cfg, 2);
  EXPECT_DOUBLE_EQ(report.find("dnm")->metrics.w1, report.find("const")->metrics.w1);
  EXPECT_DOUBLE_EQ(report.find("dnm")->metrics.m, report.find("const")->metrics.m);
}

TEST(RunExperiment, RowsAreOrderedAndConsistent) {
  const auto report = run_experiment(mini_config(), 3);
  ASSERT_EQ(report.rows.size(), 6u);
  for (const auto& row : report.rows) {
    const auto& m = row.metrics;
    EXPECT_LE(m.w1_lo, m.w1) << row.model;
    EXPECT_LE(m.w1, m.w1_hi) << row.model;
    EXPECT_LE(m.m_lo, m.m) << row.model;
    EXPECT_LE(m.m, m.m_hi) << row.model;
    EXPECT_GE(m.w1, 0.0);
    EXPECT_FALSE(m.train_time.has_value());
  }
  EXPECT_EQ(report.find("dnm")->metrics.n_par, 2u * 8 + 8 + 8 * 3 + 3);
  EXPECT_EQ(report.find("oracle")->metrics.w1, 0.0);
  EXPECT_NE(report.generator_description.find("heteroscedastic"), std::string::npos);
}

TEST(RunExperiment, TimingsWhenRequested) {
  auto cfg = mini_config();
  cfg.models = {"mean", "oracle"};
  cfg.timings = true;
  const auto report = run_experiment(cfg, 4);
  ASSERT_TRUE(report.rows[0].metrics.train_time.has_value());
  EXPECT_GE(*report.rows[0].metrics.train_time, 0.0);
  EXPECT_DOUBLE_EQ(*report.rows[1].metrics.test_time_ratio, 1.0);
}

TEST(RunExperiment, StageTaggedFailures) {
  auto cfg = mini_config();
  cfg.models = {"gpr"};
  try {
    run_experiment(cfg, 5);
    FAIL() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
  cfg = mini_config();
  cfg.models = {"dnm"};
  cfg.dnm.n_atoms = 500;
  try {
    run_experiment(cfg, 5);
    FAIL() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "train:dnm");
  }
}

TEST(RunExperiment, ByteIdenticalReportsPerSeed) {
  const auto a = emit_report(run_experiment(mini_config(), 6), ReportFormat::csv);
  const auto b = emit_report(run_experiment(mini_config(), 6), ReportFormat::csv);
  EXPECT_EQ(a, b);
  const auto c = emit_report(run_experiment(mini_config(), 7), ReportFormat::csv);
  EXPECT_NE(a, c);
}

TEST(EmitReport, HeaderOnlyForNoModels) {
  auto cfg = mini_config();
  cfg.models.clear();
  const auto text = emit_report(run_experiment(cfg, 1), ReportFormat::csv);
  EXPECT_EQ(text, "model,W1-95L,W1,W1-95R,M-95L,M,M-95R,N_Par,Train_Time,Test_Time_Ratio\n");
  EXPECT_TRUE(parse_report_csv(text).empty());
}

TEST(EmitReport, CsvRoundTrip) {
  ExperimentReport report;
  Metrics m;
  m.w1 = 0.123456789012;
  m.w1_lo = 0.1;
  m.w1_hi = 0.2;
  m.m = 3e-25;
  m.m_lo = 0.0;
  m.m_hi = 1.5e6;
  m.n_par = 4242;
  m.train_time = 1.23456;
  m.test_time_ratio = 0.5;
  report.rows.push_back({"dnm", m});
  report.rows.push_back({"oracle", Metrics{}});
  const auto parsed = parse_report_csv(emit_report(report, ReportFormat::csv));
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0].model, "dnm");
  EXPECT_NEAR(parsed[0].metrics.w1, m.w1, 1e-10);
  EXPECT_EQ(parsed[0].metrics.m, 0.0);
  EXPECT_NEAR(parsed[0].metrics.m_hi, 1.5e6, 1e-3);
  EXPECT_EQ(parsed[0].metrics.n_par, 4242u);
  EXPECT_NEAR(*parsed[0].metrics.train_time, 1.23, 1e-12);
  EXPECT_FALSE(parsed[1].metrics.train_time.has_value());
}

TEST(EmitReport, JsonHasRowsAndProvenance) {
  auto cfg = mini_config();
  cfg.models = {"oracle"};
  const auto text = emit_report(run_experiment(cfg, 1), ReportFormat::json);
  EXPECT_NE(text.find("\"rows\""), std::string::npos);
  EXPECT_NE(text.find("\"seed\""), std::string::npos);
  EXPECT_THROW(report_format_from_string("xml"), std::invalid_argument);
}

TEST(EmitReport, UnwritablePathThrows) {
  EXPECT_THROW(write_report(ExperimentReport{}, ReportFormat::csv, "/nonexistent-dir/x/report.csv"),
               std::runtime_error);
}

// Set URCD_UPDATE_GOLDEN=1 to regenerate after an intentional change.
TEST(EmitReport, MatchesGoldenMiniRun) {
  const std::filesystem::path golden = std::filesystem::path(URCD_GOLDEN_DIR) / "mini_report.csv";
  const auto text = emit_report(run_experiment(mini_config(), 2024), ReportFormat::csv);
  if (std::getenv("URCD_UPDATE_GOLDEN") != nullptr) {
    std::filesystem::create_directories(golden.parent_path());
    std::ofstream(golden, std::ios::binary) << text;
  }
  std::ifstream in(golden, std::ios::binary);
  ASSERT_TRUE(in) << "missing golden file " << golden;
  std::stringstream expected;
  expected << in.rdbuf();
  EXPECT_EQ(text, expected.str());
}
