#pragma once

// JSON model files and the line-delimited dataset format.
//
// Dataset FILE: one line per entry, {"x": [...], "samples": [[...], ...]}
// with an optional "seed". Companions: FILE.split.json holds
// {"train": [...], "test": [...]}; without it the first 80% of the lines
// train. FILE.gen.json holds the generator settings when the data is
// synthetic, which is what lets `eval` redraw oracle samples.

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "urcd/baselines.hpp"
#include "urcd/datagen.hpp"
#include "urcd/dnm.hpp"
#include "urcd/neural.hpp"
#include "urcd/training.hpp"

namespace urcd {

inline constexpr int kModelFormatVersion = 1;

std::string mlp_to_json(const Mlp& net);
Mlp mlp_from_json(std::string_view text);

using AnyModel = std::variant<DnmModel, MdnModel, DgnModel, MeanModel>;

std::string_view model_kind(const AnyModel& model) noexcept;
std::string model_to_json(const AnyModel& model);
AnyModel model_from_json(std::string_view text);

std::string generator_to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_from_json(std::string_view text);

struct LoadedDataset {
  Dataset data;
  std::optional<GeneratorConfig> generator;
};

std::string dataset_to_jsonl(const Dataset& data);
/// Leading 80/20 split.
Dataset dataset_from_jsonl(std::string_view text);

/// Writes FILE, FILE.split.json and, when given, FILE.gen.json.
void write_dataset(const std::string& path, const Dataset& data,
                   const std::optional<GeneratorConfig>& generator = std::nullopt);
LoadedDataset read_dataset(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace urcd
