#pragma once

// Decoupled training of a DnmModel: pick N training inputs as centers, use
// their target measures as the mixture atoms, label every training input by
// its nearest center and fit the classifier with cross-entropy. No transport
// distance is evaluated anywhere in this module.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "urcd/dnm.hpp"
#include "urcd/measures.hpp"
#include "urcd/neural.hpp"

namespace urcd {

struct DatasetEntry {
  Point x;
  EmpiricalMeasure target;
  std::uint64_t seed = 0;  // stream that produced the target samples
};

class Dataset {
 public:
  Dataset(std::vector<DatasetEntry> entries, std::vector<std::size_t> train,
          std::vector<std::size_t> test);
  /// First `train_fraction` of the rows train, the rest test.
  static Dataset with_leading_split(std::vector<DatasetEntry> entries, double train_fraction = 0.8);

  const std::vector<DatasetEntry>& entries() const noexcept { return entries_; }
  const DatasetEntry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<std::size_t>& train_indices() const noexcept { return train_; }
  const std::vector<std::size_t>& test_indices() const noexcept { return test_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t input_dim() const noexcept { return entries_.front().x.size(); }
  std::size_t output_dim() const noexcept { return entries_.front().target.dim(); }

  std::vector<Point> inputs(std::span<const std::size_t> indices) const;
  std::vector<Point> train_inputs() const { return inputs(train_); }

 private:
  std::vector<DatasetEntry> entries_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> test_;
};

enum class CenterStrategy { greedy_medoids, exhaustive };

struct TrainConfig {
  std::size_t n_atoms = 10;
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::relu;
  std::size_t epochs = 500;
  std::size_t batch_size = 0;  // 0 = full batch
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  CenterStrategy strategy = CenterStrategy::greedy_medoids;
  std::optional<FeatureMap> feature_map;  // identity when unset

  void validate(std::size_t n_train) const;
};

/// Upper bound on C(#train, N) for the exhaustive strategy.
inline constexpr std::uint64_t kExhaustiveSubsetCap = 100000;

/// sum over inputs of the distance to the nearest center.
double medoid_objective(std::span<const Point> inputs, std::span<const std::size_t> centers);

/// Indices of N distinct inputs minimizing medoid_objective, either exactly
/// or by forward greedy selection (ties to the lowest index).
std::vector<std::size_t> select_centers(std::span<const Point> inputs, std::size_t n,
                                        CenterStrategy strategy);

/// Index (into `centers`) of the nearest center for every input; ties go to
/// the lowest center index.
std::vector<std::size_t> assign_labels(std::span<const Point> inputs,
                                       std::span<const std::size_t> centers);

struct TrainingLog {
  std::vector<std::size_t> centers;  // dataset indices of the chosen centers
  std::vector<std::size_t> labels;   // per training row
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;    // full-batch loss after each epoch
  double train_accuracy = 0.0;
};

struct TrainedDnm {
  DnmModel model;
  TrainingLog log;
};

TrainedDnm train_dnm(const Dataset& data, const TrainConfig& cfg);

}  // namespace urcd
