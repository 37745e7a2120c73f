#include "urcd/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace urcd {
namespace {

using json = nlohmann::json;

constexpr const char* kModelFormat = "urcd-model";

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(what) + ": malformed JSON (" + e.what() + ")");
  }
}

json point_json(const Point& p) { return json(p); }

Point point_from(const json& j) {
  Point p = j.get<Point>();
  return p;
}

json measure_json(const EmpiricalMeasure& mu) {
  return json{{"atoms", mu.atoms()}, {"weights", mu.weights().values()}};
}

EmpiricalMeasure measure_from(const json& j) {
  return EmpiricalMeasure(j.at("atoms").get<std::vector<Point>>(),
                          SimplexVector(j.at("weights").get<std::vector<double>>()));
}

json mlp_json(const Mlp& net) {
  json layers = json::array();
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const Eigen::MatrixXd& w = net.weight(l);
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    const Eigen::VectorXd& b = net.bias(l);
    layers.push_back({{"weights", flat}, {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  return json{{"layer_dims", net.layer_dims()},
              {"activation", std::string(to_string(net.activation()))},
              {"layers", layers}};
}

Mlp mlp_from(const json& j) {
  const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
  const Activation act = activation_from_string(j.at("activation").get<std::string>());
  const json& layers = j.at("layers");
  if (dims.size() < 2 || layers.size() != dims.size() - 1) {
    throw std::invalid_argument("network: layer count does not match layer_dims");
  }
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto flat = layers[l].at("weights").get<std::vector<double>>();
    const auto bias = layers[l].at("bias").get<std::vector<double>>();
    const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
    const auto cols = static_cast<Eigen::Index>(dims[l]);
    if (flat.size() != static_cast<std::size_t>(rows * cols) || bias.size() != dims[l + 1]) {
      throw std::invalid_argument("network: layer " + std::to_string(l) + " has the wrong number of values");
    }
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    }
    weights.push_back(std::move(w));
    biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
  }
  return Mlp(dims, act, std::move(weights), std::move(biases));
}

json feature_map_json(const FeatureMap& phi) {
  switch (phi.kind()) {
    case FeatureMap::Kind::identity:
      return json{{"kind", "identity"}, {"dim", phi.input_dim()}};
    case FeatureMap::Kind::affine: {
      const Eigen::MatrixXd& a = phi.matrix();
      std::vector<double> flat;
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) flat.push_back(a(r, c));
      }
      const Eigen::VectorXd& b = phi.offset();
      return json{{"kind", "affine"},
                  {"rows", a.rows()},
                  {"cols", a.cols()},
                  {"matrix", flat},
                  {"offset", std::vector<double>(b.data(), b.data() + b.size())}};
    }
    case FeatureMap::Kind::table:
      return json{{"kind", "table"}, {"inputs", phi.table_inputs()}, {"features", phi.table_features()}};
  }
  throw std::logic_error("unknown feature map kind");
}

FeatureMap feature_map_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") return FeatureMap::identity(j.at("dim").get<std::size_t>());
  if (kind == "affine") {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto flat = j.at("matrix").get<std::vector<double>>();
    const auto offset = j.at("offset").get<std::vector<double>>();
    if (rows < 1 || cols < 1 || flat.size() != static_cast<std::size_t>(rows * cols) ||
        offset.size() != static_cast<std::size_t>(rows)) {
      throw std::invalid_argument("feature map: affine shape mismatch");
    }
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    }
    return FeatureMap::affine(std::move(a), Eigen::Map<const Eigen::VectorXd>(offset.data(), rows));
  }
  if (kind == "table") {
    return FeatureMap::table(j.at("inputs").get<std::vector<Point>>(), j.at("features").get<std::vector<Point>>());
  }
  throw std::invalid_argument("feature map: unknown kind '" + kind + "'");
}

json scaling_json(const OutputScaling& s) { return json{{"offset", s.offset}, {"scale", s.scale}}; }

OutputScaling scaling_from(const json& j) {
  return OutputScaling{j.at("offset").get<Point>(), j.at("scale").get<Point>()};
}

json model_json(const AnyModel& model) {
  json j{{"format", kModelFormat}, {"version", kModelFormatVersion}, {"kind", std::string(model_kind(model))}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DnmModel>) {
          j["feature_map"] = feature_map_json(m.feature_map());
          j["classifier"] = mlp_json(m.classifier());
          json atoms = json::array();
          for (const auto& a : m.atoms()) atoms.push_back(measure_json(a));
          j["atoms"] = atoms;
        } else if constexpr (std::is_same_v<T, MdnModel>) {
          j["network"] = mlp_json(m.net());
          j["heads"] = json{{"components", m.components()},
                            {"output_dim", m.output_dim()},
                            {"layout", "logits,means,log_stds"}};
          j["scaling"] = scaling_json(m.scaling());
        } else if constexpr (std::is_same_v<T, DgnModel>) {
          j["network"] = mlp_json(m.net());
          j["heads"] = json{{"output_dim", m.output_dim()}, {"layout", "mean,factor_row_major"}};
          j["scaling"] = scaling_json(m.scaling());
        } else {
          j["network"] = mlp_json(m.net());
          j["heads"] = json{{"output_dim", m.scaling().offset.size()}, {"layout", "mean"}};
          j["scaling"] = scaling_json(m.scaling());
        }
      },
      model);
  return j;
}

void check_header(const json& j, const char* what) {
  if (j.value("format", std::string{}) != kModelFormat) {
    throw std::invalid_argument(std::string(what) + ": not a urcd model file");
  }
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion) {
    throw std::invalid_argument(std::string(what) + ": unsupported schema version " + std::to_string(version));
  }
}

json generator_json(const GeneratorConfig& c) {
  return json{{"task", std::string(to_string(c.task))},
              {"d", c.d},
              {"D", c.D},
              {"n", c.n},
              {"n_test", c.n_test},
              {"S", c.S},
              {"seed", c.seed},
              {"width", c.width},
              {"depth", c.depth},
              {"dropout_rate", c.dropout_rate},
              {"elm_width", c.elm_width},
              {"elm_depth", c.elm_depth},
              {"elm_lambda", c.elm_lambda},
              {"elm_bound", c.elm_bound},
              {"elm_sparsity", c.elm_sparsity},
              {"elm_rows", c.elm_rows},
              {"drift_a0", c.drift_a0},
              {"drift_a1", c.drift_a1},
              {"diffusion_s0", c.diffusion_s0},
              {"diffusion_s1", c.diffusion_s1},
              {"n_steps", c.n_steps},
              {"horizon", c.horizon}};
}

GeneratorConfig generator_from(const json& j) {
  GeneratorConfig c;
  c.task = task_from_string(j.at("task").get<std::string>());
  j.at("d").get_to(c.d);
  j.at("D").get_to(c.D);
  j.at("n").get_to(c.n);
  j.at("n_test").get_to(c.n_test);
  j.at("S").get_to(c.S);
  j.at("seed").get_to(c.seed);
  j.at("width").get_to(c.width);
  j.at("depth").get_to(c.depth);
  j.at("dropout_rate").get_to(c.dropout_rate);
  j.at("elm_width").get_to(c.elm_width);
  j.at("elm_depth").get_to(c.elm_depth);
  j.at("elm_lambda").get_to(c.elm_lambda);
  j.at("elm_bound").get_to(c.elm_bound);
  j.at("elm_sparsity").get_to(c.elm_sparsity);
  j.at("elm_rows").get_to(c.elm_rows);
  j.at("drift_a0").get_to(c.drift_a0);
  j.at("drift_a1").get_to(c.drift_a1);
  j.at("diffusion_s0").get_to(c.diffusion_s0);
  j.at("diffusion_s1").get_to(c.diffusion_s1);
  j.at("n_steps").get_to(c.n_steps);
  j.at("horizon").get_to(c.horizon);
  c.validate();
  return c;
}

std::vector<DatasetEntry> entries_from_jsonl(std::string_view text) {
  std::vector<DatasetEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      DatasetEntry e{point_from(j.at("x")), EmpiricalMeasure(j.at("samples").get<std::vector<Point>>()),
                     j.value("seed", std::uint64_t{0})};
      entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (entries.empty()) throw std::invalid_argument("dataset: no entries");
  return entries;
}

}  // namespace

std::string mlp_to_json(const Mlp& net) {
  json j = mlp_json(net);
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["kind"] = "mlp";
  return j.dump();
}

Mlp mlp_from_json(std::string_view text) {
  const json j = parse(text, "network");
  if (j.contains("format")) check_header(j, "network");
  return mlp_from(j);
}

std::string_view model_kind(const AnyModel& model) noexcept {
  switch (model.index()) {
    case 0: return "dnm";
    case 1: return "mdn";
    case 2: return "dgn";
    default: return "mean";
  }
}

std::string model_to_json(const AnyModel& model) { return model_json(model).dump(); }

AnyModel model_from_json(std::string_view text) {
  const json j = parse(text, "model");
  check_header(j, "model");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "dnm") {
    std::vector<EmpiricalMeasure> atoms;
    for (const auto& a : j.at("atoms")) atoms.push_back(measure_from(a));
    return DnmModel(feature_map_from(j.at("feature_map")), mlp_from(j.at("classifier")), std::move(atoms));
  }
  if (kind == "mdn") {
    return MdnModel(mlp_from(j.at("network")), j.at("heads").at("components").get<std::size_t>(),
                    scaling_from(j.at("scaling")));
  }
  if (kind == "dgn") return DgnModel(mlp_from(j.at("network")), scaling_from(j.at("scaling")));
  if (kind == "mean") return MeanModel(mlp_from(j.at("network")), scaling_from(j.at("scaling")));
  throw std::invalid_argument("model: unknown kind '" + kind + "'");
}

std::string generator_to_json(const GeneratorConfig& cfg) { return generator_json(cfg).dump(2) + "\n"; }

GeneratorConfig generator_from_json(std::string_view text) { return generator_from(parse(text, "generator")); }

std::string dataset_to_jsonl(const Dataset& data) {
  std::string out;
  for (const auto& e : data.entries()) {
    json j{{"x", point_json(e.x)}, {"samples", e.target.atoms()}, {"seed", e.seed}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_jsonl(std::string_view text) {
  return Dataset::with_leading_split(entries_from_jsonl(text));
}

void write_dataset(const std::string& path, const Dataset& data, const std::optional<GeneratorConfig>& generator) {
  // Targets are stored as raw samples, so only uniform measures round-trip.
  for (const auto& e : data.entries()) {
    const auto& w = e.target.weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] != w[0]) throw std::invalid_argument("write_dataset: targets must be uniform empirical measures");
    }
  }
  write_text_file(path, dataset_to_jsonl(data));
  write_text_file(path + ".split.json",
                  json{{"train", data.train_indices()}, {"test", data.test_indices()}}.dump() + "\n");
  if (generator) {
    write_text_file(path + ".gen.json", generator_to_json(*generator));
  } else {
    std::filesystem::remove(path + ".gen.json");
  }
}

LoadedDataset read_dataset(const std::string& path) {
  std::vector<DatasetEntry> entries = entries_from_jsonl(read_text_file(path));
  std::optional<GeneratorConfig> generator;
  if (std::filesystem::exists(path + ".gen.json")) {
    generator = generator_from_json(read_text_file(path + ".gen.json"));
  }
  if (std::filesystem::exists(path + ".split.json")) {
    const json split = parse(read_text_file(path + ".split.json"), "split file");
    return LoadedDataset{Dataset(std::move(entries), split.at("train").get<std::vector<std::size_t>>(),
                                 split.at("test").get<std::vector<std::size_t>>()),
                         generator};
  }
  return LoadedDataset{Dataset::with_leading_split(std::move(entries)), generator};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace urcd
