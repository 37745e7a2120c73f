#include "urcd/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace urcd {
namespace {

std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > cap) return cap + 1;
  }
  return r;
}

std::vector<double> distance_matrix(std::span<const Point> inputs) {
  const std::size_t n = inputs.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = euclidean_distance(inputs[i], inputs[j]);
    }
  }
  return dist;
}

}  // namespace

Dataset::Dataset(std::vector<DatasetEntry> entries, std::vector<std::size_t> train,
                 std::vector<std::size_t> test)
    : entries_(std::move(entries)), train_(std::move(train)), test_(std::move(test)) {
  if (train_.size() < 2) throw std::invalid_argument("Dataset: need at least 2 training entries");
  const std::size_t d = entries_.front().x.size();
  const std::size_t big_d = entries_.front().target.dim();
  for (const auto& e : entries_) {
    if (e.x.size() != d || e.target.dim() != big_d) {
      throw std::invalid_argument("Dataset: inconsistent input or output dimension");
    }
  }
  std::set<std::size_t> seen;
  for (auto idx : train_) {
    if (idx >= entries_.size() || !seen.insert(idx).second) {
      throw std::invalid_argument("Dataset: invalid or repeated training index");
    }
  }
  for (auto idx : test_) {
    if (idx >= entries_.size() || !seen.insert(idx).second) {
      throw std::invalid_argument("Dataset: invalid test index or overlap with training split");
    }
  }
}

Dataset Dataset::with_leading_split(std::vector<DatasetEntry> entries, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("Dataset: train fraction must lie in (0, 1]");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(entries.size()) + 1e-9));
  std::vector<std::size_t> train(n_train), test(entries.size() - n_train);
  std::iota(train.begin(), train.end(), std::size_t{0});
  std::iota(test.begin(), test.end(), n_train);
  return Dataset(std::move(entries), std::move(train), std::move(test));
}

std::vector<Point> Dataset::inputs(std::span<const std::size_t> indices) const {
  std::vector<Point> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(entries_.at(i).x);
  return out;
}

void TrainConfig::validate(std::size_t n_train) const {
  if (n_atoms < 1 || n_atoms >= n_train) {
    throw std::invalid_argument("TrainConfig: need 1 <= N < #train (N = " + std::to_string(n_atoms) +
                                ", #train = " + std::to_string(n_train) + ")");
  }
  if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
  for (auto h : hidden) {
    if (h == 0) throw std::invalid_argument("TrainConfig: hidden layer of width 0");
  }
}

double medoid_objective(std::span<const Point> inputs, std::span<const std::size_t> centers) {
  double total = 0.0;
  for (const Point& x : inputs) {
    double nearest = std::numeric_limits<double>::infinity();
    for (auto c : centers) nearest = std::min(nearest, euclidean_distance(x, inputs[c]));
    total += nearest;
  }
  return total;
}

std::vector<std::size_t> select_centers(std::span<const Point> inputs, std::size_t n,
                                        CenterStrategy strategy) {
  const std::size_t size = inputs.size();
  if (n < 1 || n >= size) {
    throw std::invalid_argument("select_centers: need 1 <= N < #train (N = " + std::to_string(n) +
                                ", #train = " + std::to_string(size) + ")");
  }
  const std::vector<double> dist = distance_matrix(inputs);

  if (strategy == CenterStrategy::exhaustive) {
    if (binomial_capped(size, n, kExhaustiveSubsetCap) > kExhaustiveSubsetCap) {
      throw std::invalid_argument("select_centers: exhaustive search refused, C(" +
                                  std::to_string(size) + ", " + std::to_string(n) +
                                  ") exceeds the subset cap");
    }
    std::vector<std::size_t> subset(n), best;
    std::iota(subset.begin(), subset.end(), std::size_t{0});
    double best_value = std::numeric_limits<double>::infinity();
    while (true) {
      double value = 0.0;
      for (std::size_t x = 0; x < size; ++x) {
        double nearest = std::numeric_limits<double>::infinity();
        for (auto c : subset) nearest = std::min(nearest, dist[x * size + c]);
        value += nearest;
      }
      if (value < best_value) {
        best_value = value;
        best = subset;
      }
      // Next combination in lexicographic order.
      std::size_t i = n;
      while (i > 0 && subset[i - 1] == size - n + i - 1) --i;
      if (i == 0) break;
      ++subset[i - 1];
      for (std::size_t j = i; j < n; ++j) subset[j] = subset[j - 1] + 1;
    }
    return best;
  }

  std::vector<double> nearest(size, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(size, 0);
  std::vector<std::size_t> centers;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best_index = size;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t cand = 0; cand < size; ++cand) {
      if (chosen[cand]) continue;
      double value = 0.0;
      for (std::size_t x = 0; x < size; ++x) value += std::min(nearest[x], dist[x * size + cand]);
      if (value < best_value) {
        best_value = value;
        best_index = cand;
      }
    }
    chosen[best_index] = 1;
    centers.push_back(best_index);
    for (std::size_t x = 0; x < size; ++x) {
      nearest[x] = std::min(nearest[x], dist[x * size + best_index]);
    }
  }
  return centers;
}

std::vector<std::size_t> assign_labels(std::span<const Point> inputs,
                                       std::span<const std::size_t> centers) {
  if (centers.empty()) throw std::invalid_argument("assign_labels: no centers");
  for (auto c : centers) {
    if (c >= inputs.size()) throw std::invalid_argument("assign_labels: center index out of range");
  }
  std::vector<std::size_t> labels(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < centers.size(); ++n) {
      const double d = euclidean_distance(inputs[i], inputs[centers[n]]);
      if (d < best) {
        best = d;
        labels[i] = n;
      }
    }
  }
  return labels;
}

TrainedDnm train_dnm(const Dataset& data, const TrainConfig& cfg) {
  const auto& train = data.train_indices();
  cfg.validate(train.size());
  const FeatureMap phi = cfg.feature_map.value_or(FeatureMap::identity(data.input_dim()));
  if (phi.input_dim() != data.input_dim()) {
    throw std::invalid_argument("train_dnm: feature map input dim does not match the data");
  }

  const std::vector<Point> inputs = data.train_inputs();
  TrainingLog log;
  const std::vector<std::size_t> local_centers = select_centers(inputs, cfg.n_atoms, cfg.strategy);
  log.labels = assign_labels(inputs, local_centers);

  std::vector<EmpiricalMeasure> atoms;
  for (auto c : local_centers) {
    log.centers.push_back(train[c]);
    atoms.push_back(data.entry(train[c]).target);
  }

  std::vector<Point> features;
  features.reserve(inputs.size());
  for (const auto& x : inputs) features.push_back(phi.apply(x));
  const Eigen::MatrixXd x_all = to_matrix(features);
  Eigen::MatrixXd y_all = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.n_atoms),
                                                static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    y_all(static_cast<Eigen::Index>(log.labels[i]), static_cast<Eigen::Index>(i)) = 1.0;
  }

  std::vector<std::size_t> dims{phi.output_dim()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(cfg.n_atoms);
  Rng init_rng(derive_seed(cfg.seed, 0));
  Mlp net(dims, cfg.activation, init_rng);
  AdamState adam = AdamState::for_network(net, cfg.learning_rate);

  const std::size_t n = inputs.size();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  log.initial_loss = cross_entropy_grad(net, x_all, y_all).loss;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch == n) {
      adam_step(net, adam, cross_entropy_grad(net, x_all, y_all).grads);
    } else {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t stop = std::min(n, start + batch);
        Eigen::MatrixXd xb(x_all.rows(), static_cast<Eigen::Index>(stop - start));
        Eigen::MatrixXd yb(y_all.rows(), static_cast<Eigen::Index>(stop - start));
        for (std::size_t k = start; k < stop; ++k) {
          xb.col(static_cast<Eigen::Index>(k - start)) = x_all.col(static_cast<Eigen::Index>(order[k]));
          yb.col(static_cast<Eigen::Index>(k - start)) = y_all.col(static_cast<Eigen::Index>(order[k]));
        }
        adam_step(net, adam, cross_entropy_grad(net, xb, yb).grads);
      }
    }
    log.epoch_loss.push_back(cross_entropy_grad(net, x_all, y_all).loss);
  }

  const Eigen::MatrixXd logits = net.forward_batch(x_all);
  std::size_t correct = 0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    Eigen::Index arg = 0;
    logits.col(c).maxCoeff(&arg);
    if (static_cast<std::size_t>(arg) == log.labels[static_cast<std::size_t>(c)]) ++correct;
  }
  log.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);

  return TrainedDnm{DnmModel(phi, std::move(net), std::move(atoms)), std::move(log)};
}

}  // namespace urcd
