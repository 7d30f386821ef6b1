#pragma once

// Synchronous federated training with per-cluster model perturbation.
//
// Every round, each cluster starts from the current global model, takes one
// SGD step on a batch sampled without replacement from its own data, clips
// the resulting update to `clip_norm`, adds calibrated noise to the updated
// parameters, and hands the perturbed model to the coordinator. The
// coordinator averages the perturbed models into the next global model.
//
// Batch and noise streams are keyed by (master seed, cluster, round), and
// the average sums clusters in ascending id order, so results do not depend
// on the number of worker threads.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpfed/accountant.hpp"
#include "dpfed/data.hpp"
#include "dpfed/dp.hpp"
#include "dpfed/metrics.hpp"
#include "dpfed/model.hpp"

namespace dpfed::federation {

enum class Normalization { kGlobal, kPerCluster };

struct DataSource {
  enum class Kind { kSynthetic, kCsv };
  Kind kind = Kind::kSynthetic;
  // synthetic
  double separation = 3.0;
  /// Training pool size; grown to clusters * per_cluster when smaller.
  std::size_t train_size = 147000;
  std::size_t test_size = 5000;
  std::uint64_t seed = 2024;
  // csv
  std::string train_path;
  std::string test_path;
  data::CategoricalEncoding categorical = data::CategoricalEncoding::kOrdinal;
};

struct ExperimentConfig {
  model::LayerShape shape{{21, 128, 128, 5}};
  model::Activation activation = model::Activation::kRelu;
  double learning_rate = 0.0046;
  std::size_t batch_size = 1024;

  dp::Mechanism mechanism = dp::Mechanism::kNone;
  /// +inf selects Mechanism::kNone regardless of `mechanism`.
  double epsilon = 0.5;
  double delta = 1e-5;
  double clip_norm = 1.0;
  /// Overrides the sampling fraction q; default is batch / per_cluster.
  std::optional<double> batch_fraction;
  double delta_slack = 1e-5;

  std::size_t clusters = 3;
  std::size_t rounds = 1000;
  std::size_t per_cluster = 1470;
  std::uint64_t master_seed = 1;
  std::size_t eval_every = 1;
  /// Tail window in rounds; converted to a record count with eval_every.
  std::size_t tail_window = 100;
  bool per_cluster_eval = false;
  Normalization normalization = Normalization::kGlobal;

  DataSource data;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  /// Mechanism after mapping epsilon = inf to kNone.
  dp::Mechanism effective_mechanism() const;
  std::size_t effective_batch() const;
  double effective_batch_fraction() const;
  /// Calibration inputs for one cluster.
  dp::DpConfig dp_config() const;
  std::size_t record_count() const;
  std::size_t tail_records() const;
};

struct ClusterState {
  std::size_t cluster_id = 0;
  data::ClusterDataset data;
  /// Local parameters before noise, after the latest round.
  model::ModelParams params;
};

struct RoundRecord {
  std::size_t iteration = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  /// Mean over clusters of the batch loss in this round.
  double mean_loss = 0.0;
  double elapsed_ms = 0.0;
  /// Test accuracy of each cluster's pre-noise local model; empty unless
  /// per_cluster_eval is on.
  std::vector<double> cluster_accuracy;
};

struct TailMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t window_records = 0;
};

struct Budgets {
  accountant::PrivacyBudget parallel;
  accountant::PrivacyBudget naive;
  std::optional<accountant::PrivacyBudget> advanced;
  /// Set when advanced composition is undefined for these inputs.
  std::string advanced_error;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RoundRecord> records;
  model::ModelParams final_params;
  TailMetrics tail;
  metrics::ConfusionMatrix final_confusion{data::kClassCount};
  double sensitivity = 0.0;
  dp::NoiseScale noise;
  /// Absent when no noise is added.
  std::optional<Budgets> budgets;
  double total_ms = 0.0;
};

struct RunOptions {
  /// Worker threads for the per-cluster loop; never changes results.
  std::size_t threads = 1;
  /// Called after every evaluation, from the coordinating thread.
  std::function<void(const RoundRecord&)> on_record;
};

struct LocalOutcome {
  model::ModelParams perturbed;
  double loss = 0.0;
};

/// One cluster's contribution to round `round` (1-based). Updates
/// state.params to the clipped, pre-noise local model.
LocalOutcome local_round(ClusterState& state, const model::ModelParams& global,
                         const ExperimentConfig& cfg, std::size_t round);

/// Elementwise mean, summed in the given order with compensated
/// (double-double) accumulation and divided by N. The mean of N copies of
/// one vector is that vector exactly.
model::ModelParams aggregate(std::span<const model::ModelParams> updates);
std::vector<double> aggregate_values(std::span<const std::vector<double>> updates);

/// Confusion matrix of `params` on `dataset`.
metrics::ConfusionMatrix evaluate(const model::ModelParams& params,
                                  const data::Dataset& dataset);

ExperimentResult run_experiment(const ExperimentConfig& cfg, const data::Dataset& train,
                                const data::Dataset& test, const RunOptions& options = {});

/// Budgets for the configuration, or nullopt when the mechanism is none.
std::optional<Budgets> compute_budgets(const ExperimentConfig& cfg);

/// Loads or generates the train/test splits named by cfg.data.
std::pair<data::Dataset, data::Dataset> load_datasets(const ExperimentConfig& cfg,
                                                      data::CodeTable* codes = nullptr);

}  // namespace dpfed::federation
