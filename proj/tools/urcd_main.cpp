// urcd: generate datasets, train and evaluate measure-valued models, run
// experiments and print rate counts.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "urcd/baselines.hpp"
#include "urcd/datagen.hpp"
#include "urcd/dnm.hpp"
#include "urcd/harness.hpp"
#include "urcd/io.hpp"
#include "urcd/training.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

// Raised for bad user input detected after parsing.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  if (text.empty() || text == "none") return dims;
  std::istringstream in(text);
  for (std::string tok; std::getline(in, tok, ',');) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(tok, &used);
      if (used != tok.size() || v == 0) throw std::invalid_argument(tok);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("hidden: expected comma-separated positive widths, got '" + text + "'");
    }
  }
  return dims;
}

// Splices the key = value file named by --config into the argument list right
// after the subcommand, so flags given on the command line take precedence.
std::vector<std::string> expand_config(int argc, char** argv, const std::vector<std::string>& subcommands) {
  std::vector<std::string> args(argv, argv + argc);
  std::size_t sub = 0;
  for (std::size_t i = 1; i < args.size() && sub == 0; ++i) {
    for (const auto& name : subcommands) {
      if (args[i] == name) sub = i;
    }
  }
  if (sub == 0) return args;
  std::string path;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::FileError&) {
    throw ConfigError("config file not found: " + path);
  }
  std::vector<std::string> extra;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == args[sub])) {
      throw ConfigError("config section '" + item.parents[0] + "' does not match subcommand " + args[sub]);
    }
    std::string joined;
    for (const auto& v : item.inputs) joined += (joined.empty() ? "" : ",") + v;
    extra.push_back("--" + item.name + "=" + joined);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, extra.begin(), extra.end());
  return args;
}

std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string tok; std::getline(in, tok, ',');) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

// Options shared by every subcommand that generates data.
struct GenOptions {
  std::string task = "heteroscedastic";
  urcd::GeneratorConfig cfg;

  void attach(CLI::App& app) {
    app.add_option("--task", task, "heteroscedastic | mc-dropout | elm | sde")->capture_default_str();
    app.add_option("--d", cfg.d, "input dimension (state dimension for sde)")->capture_default_str();
    app.add_option("--D", cfg.D, "output dimension")->capture_default_str();
    app.add_option("--n", cfg.n, "number of training inputs")->capture_default_str();
    app.add_option("--n-test,--n_test", cfg.n_test, "number of test inputs")->capture_default_str();
    app.add_option("--S", cfg.S, "samples per input")->capture_default_str();
    app.add_option("--width", cfg.width, "ground-truth network width")->capture_default_str();
    app.add_option("--depth", cfg.depth, "ground-truth network depth")->capture_default_str();
    app.add_option("--dropout-rate,--dropout_rate", cfg.dropout_rate)->capture_default_str();
    app.add_option("--elm-width,--elm_width", cfg.elm_width)->capture_default_str();
    app.add_option("--elm-depth,--elm_depth", cfg.elm_depth)->capture_default_str();
    app.add_option("--elm-lambda,--elm_lambda", cfg.elm_lambda)->capture_default_str();
    app.add_option("--elm-bound,--elm_bound", cfg.elm_bound)->capture_default_str();
    app.add_option("--elm-sparsity,--elm_sparsity", cfg.elm_sparsity)->capture_default_str();
    app.add_option("--elm-rows,--elm_rows", cfg.elm_rows)->capture_default_str();
    app.add_option("--drift-a0,--drift_a0", cfg.drift_a0)->capture_default_str();
    app.add_option("--drift-a1,--drift_a1", cfg.drift_a1)->capture_default_str();
    app.add_option("--diffusion-s0,--diffusion_s0", cfg.diffusion_s0)->capture_default_str();
    app.add_option("--diffusion-s1,--diffusion_s1", cfg.diffusion_s1)->capture_default_str();
    app.add_option("--n-steps,--n_steps", cfg.n_steps, "Euler-Maruyama steps")->capture_default_str();
    app.add_option("--horizon", cfg.horizon)->capture_default_str();
  }

  urcd::GeneratorConfig resolve(std::uint64_t seed) const {
    urcd::GeneratorConfig out = cfg;
    try {
      out.task = urcd::task_from_string(task);
      out.seed = seed;
      out.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return out;
  }
};

// Options shared by every subcommand that trains models.
struct TrainOptions {
  std::size_t n_atoms = 10;
  std::string hidden = "64,64";
  std::string activation = "relu";
  std::size_t epochs = 500;
  std::size_t batch_size = 0;
  double lr = 1e-2;
  std::string strategy = "greedy_medoids";
  std::size_t mdn_components = 3;
  std::size_t em_iters = 100;

  void attach(CLI::App& app, bool with_n) {
    if (with_n) app.add_option("--n", n_atoms, "number of mixture atoms N")->capture_default_str();
    app.add_option("--hidden", hidden, "hidden widths, comma separated ('none' for no hidden layer)")
        ->capture_default_str();
    app.add_option("--activation", activation, "relu | tanh | sigmoid | identity")->capture_default_str();
    app.add_option("--epochs", epochs)->capture_default_str();
    app.add_option("--batch-size,--batch_size", batch_size, "0 = full batch")->capture_default_str();
    app.add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app.add_option("--strategy", strategy, "greedy_medoids | exhaustive")->capture_default_str();
    app.add_option("--mdn-components,--mdn_components", mdn_components)->capture_default_str();
    app.add_option("--em-iters,--em_iters", em_iters)->capture_default_str();
  }

  urcd::TrainConfig dnm(std::uint64_t seed) const {
    urcd::TrainConfig t;
    t.n_atoms = n_atoms;
    t.hidden = parse_dims(hidden);
    t.activation = parse_activation();
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.learning_rate = lr;
    t.seed = seed;
    if (strategy == "greedy_medoids" || strategy == "greedy") {
      t.strategy = urcd::CenterStrategy::greedy_medoids;
    } else if (strategy == "exhaustive") {
      t.strategy = urcd::CenterStrategy::exhaustive;
    } else {
      throw ConfigError("strategy: expected greedy_medoids or exhaustive, got '" + strategy + "'");
    }
    return t;
  }

  urcd::RegressorConfig regressor(std::uint64_t seed) const {
    urcd::RegressorConfig r;
    r.hidden = parse_dims(hidden);
    r.activation = parse_activation();
    r.epochs = epochs;
    r.learning_rate = lr;
    r.seed = seed;
    return r;
  }

 private:
  urcd::Activation parse_activation() const {
    try {
      return urcd::activation_from_string(activation);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

urcd::ReportFormat parse_format(const std::string& name) {
  try {
    return urcd::report_format_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void emit(const urcd::ExperimentReport& report, urcd::ReportFormat format, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << urcd::emit_report(report, format);
  } else {
    urcd::write_report(report, format, path);
  }
}

urcd::LoadedDataset load_dataset(const std::string& path) {
  try {
    return urcd::read_dataset(path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

urcd::MeasurePredictor predictor_for(const urcd::AnyModel& model, std::size_t samples, std::uint64_t seed) {
  return std::visit(
      [&](const auto& m) -> urcd::MeasurePredictor {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, urcd::DnmModel>) {
          return [&m](const urcd::Point& x) { return m.predict(x); };
        } else if constexpr (std::is_same_v<T, urcd::MdnModel>) {
          return [&m, samples, seed](const urcd::Point& x) {
            return urcd::mdn_predict_measure(m, x, samples, seed);
          };
        } else if constexpr (std::is_same_v<T, urcd::DgnModel>) {
          return [&m, samples, seed](const urcd::Point& x) { return m.predict_measure(x, samples, seed); };
        } else {
          return [&m](const urcd::Point& x) { return m.predict_measure(x); };
        }
      },
      model);
}

std::size_t parameter_count(const urcd::AnyModel& model) {
  return std::visit([](const auto& m) { return m.parameter_count(); }, model);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure-valued regression with softmax mixtures of empirical measures"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  // gen
  GenOptions gen_opts;
  std::string gen_out;
  std::uint64_t gen_seed = 0;
  bool gen_describe = false;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", "key = value file mirroring the flags");
  gen_opts.attach(*gen);
  gen->add_option("--out", gen_out, "dataset file (JSON lines)");
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_flag("--describe", gen_describe, "print the generator parameterisation and exit");

  // train
  std::string train_data, train_out, train_model = "dnm";
  std::uint64_t train_seed = 0;
  TrainOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "fit a model on a dataset file");
  train->add_option("--config", "key = value file mirroring the flags");
  train->add_option("--data", train_data, "dataset file")->required();
  train->add_option("--out", train_out, "model file")->required();
  train->add_option("--model", train_model, "dnm | mdn | dgn | mean")->capture_default_str();
  train->add_option("--seed", train_seed)->capture_default_str();
  train_opts.attach(*train, true);

  // eval
  std::string eval_model_path, eval_data, eval_format = "csv", eval_out;
  std::uint64_t eval_seed = 0;
  std::size_t eval_samples = 0;
  double eval_level = 0.95;
  std::size_t eval_resamples = 1000;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a model against oracle samples");
  eval->add_option("--config", "key = value file mirroring the flags");
  eval->add_option("--model", eval_model_path, "model file")->required();
  eval->add_option("--data", eval_data, "dataset file")->required();
  eval->add_option("--seed", eval_seed)->capture_default_str();
  eval->add_option("--samples", eval_samples, "oracle samples per input (0 = dataset S)")->capture_default_str();
  eval->add_option("--level", eval_level)->capture_default_str();
  eval->add_option("--resamples", eval_resamples, "bootstrap resamples")->capture_default_str();
  eval->add_option("--format", eval_format, "csv | json")->capture_default_str();
  eval->add_option("--report", eval_out, "output file (default stdout)");

  // experiment
  GenOptions exp_gen;
  TrainOptions exp_train;
  std::string exp_models = "dnm,mdn,dgn,mean,oracle", exp_report, exp_format = "csv";
  std::uint64_t exp_seed = 0;
  std::size_t exp_atoms = 10;
  double exp_level = 0.95;
  std::size_t exp_resamples = 1000;
  bool exp_timings = false;
  CLI::App* experiment = app.add_subcommand("experiment", "generate, train every model, evaluate, report");
  experiment->add_option("--config", "key = value file mirroring the flags");
  exp_gen.attach(*experiment);
  exp_train.attach(*experiment, false);
  experiment->add_option("--atoms,--n-atoms,--n_atoms", exp_atoms, "DNM mixture atoms N")->capture_default_str();
  experiment->add_option("--models", exp_models, "comma separated: dnm,const,mdn,dgn,mean,oracle")
      ->capture_default_str();
  experiment->add_option("--seed", exp_seed)->capture_default_str();
  experiment->add_option("--report", exp_report, "output file (default stdout)");
  experiment->add_option("--format", exp_format, "csv | json")->capture_default_str();
  experiment->add_option("--level", exp_level)->capture_default_str();
  experiment->add_option("--resamples", exp_resamples, "bootstrap resamples")->capture_default_str();
  experiment->add_flag("--timings", exp_timings, "fill Train_Time and Test_Time_Ratio (not reproducible)");

  // rates
  bool rates_neps = false, rates_nq = false;
  urcd::RateParams rp;
  double rates_eps = 0.1, rates_m = 1.0;
  std::size_t rates_big_d = 1;
  CLI::App* rates = app.add_subcommand("rates", "mixture-count and quantizer-size bounds");
  rates->add_option("--config", "key = value file mirroring the flags");
  rates->add_flag("--neps", rates_neps, "number of atoms N(eps) for Hölder moduli");
  rates->add_flag("--nq", rates_nq, "quantizer size N_Q(eps) of the radius-M ball in R^D");
  rates->add_option("--eps", rates_eps)->capture_default_str();
  rates->add_option("--A", rp.A)->capture_default_str();
  rates->add_option("--alpha", rp.alpha)->capture_default_str();
  rates->add_option("--B", rp.B)->capture_default_str();
  rates->add_option("--beta", rp.beta)->capture_default_str();
  rates->add_option("--diam", rp.diam)->capture_default_str();
  rates->add_option("--d", rp.d)->capture_default_str();
  rates->add_option("--D", rates_big_d)->capture_default_str();
  rates->add_option("--M", rates_m)->capture_default_str();

  try {
    std::vector<std::string> names;
    for (const CLI::App* sub : app.get_subcommands({})) names.push_back(sub->get_name());
    std::vector<std::string> args = expand_config(argc, argv, names);
    std::vector<char*> ptrs;
    for (auto& a : args) ptrs.push_back(a.data());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const ConfigError& e) {
    std::cerr << "urcd: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*gen) {
      const urcd::GeneratorConfig cfg = gen_opts.resolve(gen_seed);
      if (gen_describe) {
        std::cout << cfg.describe();
        return 0;
      }
      if (gen_out.empty()) throw ConfigError("gen: --out is required unless --describe is given");
      const urcd::GeneratedTask task = urcd::generate(cfg);
      urcd::write_dataset(gen_out, task.data, cfg);
      std::cerr << "wrote " << task.data.size() << " entries to " << gen_out << '\n';
    } else if (*train) {
      const urcd::LoadedDataset loaded = load_dataset(train_data);
      const urcd::Dataset& data = loaded.data;
      if (train_model == "dnm") {
        urcd::TrainConfig tc = train_opts.dnm(train_seed);
        try {
          tc.validate(data.train_indices().size());
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
        const urcd::TrainedDnm trained = urcd::train_dnm(data, tc);
        urcd::write_text_file(train_out, urcd::model_to_json(trained.model));
        std::cerr << "final loss " << trained.log.epoch_loss.back() << ", train accuracy "
                  << trained.log.train_accuracy << '\n';
      } else if (train_model == "mdn") {
        urcd::write_text_file(train_out, urcd::model_to_json(urcd::mdn_fit(
                                             data, train_opts.mdn_components, train_opts.regressor(train_seed),
                                             train_opts.em_iters)));
      } else if (train_model == "dgn") {
        urcd::write_text_file(train_out, urcd::model_to_json(urcd::dgn_fit(data, train_opts.regressor(train_seed))));
      } else if (train_model == "mean") {
        urcd::write_text_file(train_out,
                              urcd::model_to_json(urcd::mean_dnn_fit(data, train_opts.regressor(train_seed))));
      } else {
        throw ConfigError("train: unknown model '" + train_model + "' (expected dnm, mdn, dgn or mean)");
      }
    } else if (*eval) {
      const urcd::ReportFormat format = parse_format(eval_format);
      urcd::AnyModel model = [&] {
        try {
          return urcd::model_from_json(urcd::read_text_file(eval_model_path));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }();
      const urcd::LoadedDataset loaded = load_dataset(eval_data);
      const urcd::Dataset& data = loaded.data;
      const std::size_t samples = eval_samples ? eval_samples : data.entry(0).target.size();
      // Without generator settings the stored targets act as the oracle.
      std::vector<urcd::EmpiricalMeasure> oracle;
      if (loaded.generator) {
        oracle = urcd::oracle_measures(data, urcd::true_sampler(*loaded.generator), samples,
                                       urcd::derive_seed(eval_seed, 20));
      } else {
        for (const auto& e : data.entries()) oracle.push_back(e.target);
      }
      const auto errors = urcd::eval_model(predictor_for(model, samples, urcd::derive_seed(eval_seed, 21)),
                                           data, oracle);
      urcd::ExperimentReport report;
      report.seed = eval_seed;
      if (loaded.generator) report.generator_description = loaded.generator->describe();
      urcd::ReportRow row{std::string(urcd::model_kind(model)),
                          urcd::summarize(errors, eval_level, eval_resamples, urcd::derive_seed(eval_seed, 30))};
      row.metrics.n_par = parameter_count(model);
      report.rows.push_back(row);
      emit(report, format, eval_out);
    } else if (*experiment) {
      urcd::ExperimentConfig cfg;
      cfg.generator = exp_gen.resolve(exp_seed);
      cfg.models = parse_list(exp_models);
      cfg.dnm = exp_train.dnm(exp_seed);
      cfg.dnm.n_atoms = exp_atoms;
      cfg.regressor = exp_train.regressor(exp_seed);
      cfg.mdn_components = exp_train.mdn_components;
      cfg.em_iters = exp_train.em_iters;
      cfg.level = exp_level;
      cfg.resamples = exp_resamples;
      cfg.timings = exp_timings;
      const urcd::ReportFormat format = parse_format(exp_format);
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      urcd::ExperimentReport report;
      try {
        report = urcd::run_experiment(cfg, exp_seed);
      } catch (const urcd::StageError& e) {
        if (e.stage() == "config") throw ConfigError(e.what());
        throw;
      }
      emit(report, format, exp_report);
    } else if (*rates) {
      if (rates_neps == rates_nq) throw ConfigError("rates: give exactly one of --neps or --nq");
      try {
        if (rates_neps) {
          const auto n = urcd::n_epsilon(rp, rates_eps);
          std::cout << "n_epsilon " << n << '\n';
        } else {
          const auto n = urcd::n_quantizer(rates_eps, rates_big_d, rates_m);
          std::cout << "n_quantizer " << n << '\n';
        }
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      } catch (const std::domain_error& e) {
        throw ConfigError(e.what());
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "urcd: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "urcd: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
