#include "dpfed/federation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "dpfed/error.hpp"
#include "dpfed/kernels.hpp"
#include "dpfed/rng.hpp"

namespace dpfed::federation {
namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Runs body(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by any worker is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  shape.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("model.learning_rate must be positive and finite");
  }
  if (batch_size == 0) throw ValidationError("model.batch_size must be >= 1");
  if (!(epsilon > 0.0)) throw ValidationError("dp.epsilon must be > 0 (or inf)");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("dp.delta must lie in (0, 1)");
  if (!(clip_norm > 0.0)) throw ValidationError("dp.clip_norm must be > 0");
  if (batch_fraction && !(*batch_fraction > 0.0 && *batch_fraction <= 1.0)) {
    throw ValidationError("dp.batch_fraction must lie in (0, 1]");
  }
  if (!(delta_slack >= 0.0) || !std::isfinite(delta_slack)) {
    throw ValidationError("dp.delta_slack must be non-negative and finite");
  }
  if (effective_mechanism() != dp::Mechanism::kNone && !std::isfinite(clip_norm)) {
    throw ValidationError("dp.clip_norm must be finite when noise is added");
  }
  if (clusters == 0) throw ValidationError("federation.clusters must be >= 1");
  if (rounds == 0) throw ValidationError("federation.rounds must be >= 1");
  if (per_cluster == 0) throw ValidationError("federation.per_cluster must be >= 1");
  if (eval_every == 0) throw ValidationError("federation.eval_every must be >= 1");
  if (tail_window == 0) throw ValidationError("federation.tail_window must be >= 1");
  if (data.kind == DataSource::Kind::kSynthetic) {
    if (!(data.separation >= 0.0) || !std::isfinite(data.separation)) {
      throw ValidationError("data.separation must be finite and non-negative");
    }
    if (data.test_size < data::kClassCount) {
      throw ValidationError("data.test_size must be >= 5");
    }
  } else if (data.train_path.empty() || data.test_path.empty()) {
    throw ValidationError("data.train and data.test are required for csv data");
  }
}

dp::Mechanism ExperimentConfig::effective_mechanism() const {
  return std::isinf(epsilon) ? dp::Mechanism::kNone : mechanism;
}

std::size_t ExperimentConfig::effective_batch() const {
  return std::min(batch_size, per_cluster);
}

double ExperimentConfig::effective_batch_fraction() const {
  if (batch_fraction) return *batch_fraction;
  return static_cast<double>(effective_batch()) / static_cast<double>(per_cluster);
}

dp::DpConfig ExperimentConfig::dp_config() const {
  dp::DpConfig c;
  c.mechanism = effective_mechanism();
  c.epsilon = epsilon;
  c.delta = delta;
  c.clip_norm = clip_norm;
  c.learning_rate = learning_rate;
  c.dataset_size = per_cluster;
  c.batch_fraction = effective_batch_fraction();
  c.max_rounds = rounds;
  return c;
}

std::size_t ExperimentConfig::record_count() const { return ceil_div(rounds, eval_every); }

std::size_t ExperimentConfig::tail_records() const {
  return std::min(record_count(), ceil_div(tail_window, eval_every));
}

// ---------------------------------------------------------------- round

LocalOutcome local_round(ClusterState& state, const model::ModelParams& global,
                         const ExperimentConfig& cfg, std::size_t round) {
  if (global.shape != cfg.shape || global.values.size() != cfg.shape.parameter_count()) {
    throw LayoutError("global model does not match the configured shape");
  }
  const data::Dataset& local = state.data.dataset;
  if (local.empty()) throw ValidationError("cluster has no data");
  if (local.width() != cfg.shape.inputs()) {
    throw ValidationError("cluster data width does not match the model input");
  }

  const std::size_t batch = std::min(cfg.batch_size, local.size());
  Engine batch_stream =
      make_stream(cfg.master_seed, StreamTag::kBatch, state.cluster_id, round);
  std::vector<std::size_t> all(local.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  picked.reserve(batch);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), batch, batch_stream);

  std::vector<double> features;
  std::vector<int> labels;
  features.reserve(batch * local.width());
  labels.reserve(batch);
  for (std::size_t idx : picked) {
    const auto f = local.features(idx);
    features.insert(features.end(), f.begin(), f.end());
    labels.push_back(local.label(idx));
  }

  const auto [loss, grad] =
      model::loss_and_gradient(global, {features, labels, local.width()});
  const model::ModelParams stepped = model::sgd_step(global, grad, cfg.learning_rate);
  if (!stepped.all_finite()) {
    throw DivergenceError(round, "cluster " + std::to_string(state.cluster_id) +
                                     " produced a non-finite update");
  }
  const std::vector<double> update =
      dp::clip_update(model::param_delta(stepped, global), cfg.clip_norm);

  model::ModelParams theta = global;
  kernels::add(global.values, update, theta.values);
  state.params = theta;

  const dp::DpConfig dpc = cfg.dp_config();
  const dp::NoiseScale scale = dp::calibrate(dpc);
  if (dpc.mechanism == dp::Mechanism::kNone) return {std::move(theta), loss};

  Engine noise_stream =
      make_stream(cfg.master_seed, StreamTag::kNoise, state.cluster_id, round);
  const auto noise = dp::sample_noise(dpc.mechanism, scale, theta.values.size(), noise_stream);
  return {dp::perturb(theta, noise), loss};
}

// ---------------------------------------------------------------- aggregate

std::vector<double> aggregate_values(std::span<const std::vector<double>> updates) {
  if (updates.empty()) throw ValidationError("aggregate needs at least one update");
  const std::size_t dim = updates.front().size();
  for (const auto& u : updates) {
    if (u.size() != dim) throw LayoutError("aggregate: updates have different lengths");
  }
  const auto& k = kernels::active();
  std::vector<double> hi = updates.front();
  std::vector<double> lo(dim, 0.0);
  for (std::size_t n = 1; n < updates.size(); ++n) {
    k.dd_accumulate(hi.data(), lo.data(), updates[n].data(), dim);
  }
  std::vector<double> mean(dim);
  k.dd_divide(hi.data(), lo.data(), static_cast<double>(updates.size()), mean.data(), dim);
  return mean;
}

model::ModelParams aggregate(std::span<const model::ModelParams> updates) {
  if (updates.empty()) throw ValidationError("aggregate needs at least one update");
  const auto& first = updates.front();
  std::vector<std::vector<double>> values;
  values.reserve(updates.size());
  for (const auto& u : updates) {
    if (u.shape != first.shape || u.activation != first.activation) {
      throw LayoutError("aggregate: updates have different layouts");
    }
    values.push_back(u.values);
  }
  return {first.shape, first.activation, aggregate_values(values)};
}

// ---------------------------------------------------------------- run

metrics::ConfusionMatrix evaluate(const model::ModelParams& params,
                                  const data::Dataset& dataset) {
  const auto preds = model::predict_batch(params, dataset.feature_matrix(), dataset.size());
  return metrics::confusion(preds, dataset.labels(), params.shape.outputs());
}

std::optional<Budgets> compute_budgets(const ExperimentConfig& cfg) {
  if (cfg.effective_mechanism() == dp::Mechanism::kNone) return std::nullopt;
  Budgets b;
  b.parallel = accountant::compose_parallel(cfg.epsilon, cfg.delta);
  b.naive = accountant::compose_naive(cfg.epsilon, cfg.delta, cfg.clusters, cfg.rounds);
  try {
    b.advanced = accountant::compose_advanced(cfg.epsilon, cfg.delta, cfg.clusters,
                                              cfg.rounds, cfg.delta_slack);
  } catch (const DomainError& e) {
    b.advanced_error = e.what();
  }
  return b;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const data::Dataset& train,
                                const data::Dataset& test, const RunOptions& options) {
  cfg.validate();
  if (train.empty() || test.empty()) throw ValidationError("train and test must be nonempty");
  if (train.width() != cfg.shape.inputs() || test.width() != cfg.shape.inputs()) {
    throw ValidationError("model input width " + std::to_string(cfg.shape.inputs()) +
                          " does not match the dataset width " +
                          std::to_string(train.width()));
  }
  if (train.schema().classes() != cfg.shape.outputs()) {
    throw ValidationError("model output width does not match the class count");
  }

  ExperimentResult result;
  result.config = cfg;
  const dp::DpConfig dpc = cfg.dp_config();
  result.noise = dp::calibrate(dpc);
  if (dpc.mechanism != dp::Mechanism::kNone) {
    result.sensitivity = dp::sensitivity(cfg.learning_rate, cfg.clip_norm, cfg.per_cluster);
  }
  result.budgets = compute_budgets(cfg);

  // Data preparation: normalization and partitioning.
  std::vector<ClusterState> clusters;
  data::Dataset eval_set = test;
  if (cfg.normalization == Normalization::kGlobal) {
    auto [normalized, stats] = data::normalize(train);
    eval_set = data::normalize(test, stats).first;
    for (auto& part : data::partition(normalized, cfg.clusters, cfg.per_cluster,
                                      cfg.master_seed)) {
      clusters.push_back({part.cluster_id, std::move(part), {}});
    }
  } else {
    const auto stats = data::compute_stats(train);
    eval_set = data::normalize(test, stats).first;
    for (auto& part : data::partition(train, cfg.clusters, cfg.per_cluster, cfg.master_seed)) {
      part.dataset = data::normalize(part.dataset).first;
      clusters.push_back({part.cluster_id, std::move(part), {}});
    }
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  model::ModelParams global = model::init_model(cfg.shape, cfg.master_seed, cfg.activation);
  for (auto& c : clusters) c.params = global;

  std::vector<model::ModelParams> perturbed(clusters.size());
  std::vector<double> losses(clusters.size());
  result.records.reserve(cfg.record_count());

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    parallel_for(clusters.size(), options.threads, [&](std::size_t n) {
      auto outcome = local_round(clusters[n], global, cfg, round);
      perturbed[n] = std::move(outcome.perturbed);
      losses[n] = outcome.loss;
    });
    global = aggregate(perturbed);
    if (!global.all_finite()) {
      throw DivergenceError(round, "aggregated global model has non-finite parameters");
    }

    if (round % cfg.eval_every == 0 || round == cfg.rounds) {
      RoundRecord rec;
      rec.iteration = round;
      const auto cm = evaluate(global, eval_set);
      rec.accuracy = metrics::accuracy(cm);
      rec.precision = metrics::macro_precision(cm);
      rec.recall = metrics::macro_recall(cm);
      double loss_sum = 0.0;
      for (double l : losses) loss_sum += l;
      rec.mean_loss = loss_sum / static_cast<double>(losses.size());
      if (cfg.per_cluster_eval) {
        for (const auto& c : clusters) {
          rec.cluster_accuracy.push_back(metrics::accuracy(evaluate(c.params, eval_set)));
        }
      }
      rec.elapsed_ms = elapsed_ms();
      if (options.on_record) options.on_record(rec);
      result.records.push_back(std::move(rec));
    }
  }
  result.total_ms = elapsed_ms();

  result.final_params = global;
  result.final_confusion = evaluate(global, eval_set);

  const std::size_t window = cfg.tail_records();
  std::vector<double> acc, prec, rec;
  for (const auto& r : result.records) {
    acc.push_back(r.accuracy);
    prec.push_back(r.precision);
    rec.push_back(r.recall);
  }
  result.tail = {metrics::tail_average(acc, window), metrics::tail_average(prec, window),
                 metrics::tail_average(rec, window), window};
  return result;
}

// ---------------------------------------------------------------- data

std::pair<data::Dataset, data::Dataset> load_datasets(const ExperimentConfig& cfg,
                                                      data::CodeTable* codes) {
  if (cfg.data.kind == DataSource::Kind::kSynthetic) {
    const std::size_t needed = cfg.clusters * cfg.per_cluster;
    const std::size_t pool = std::max(needed, cfg.data.train_size);
    return data::generate_synthetic_split(ceil_div(pool, data::kClassCount),
                                          ceil_div(cfg.data.test_size, data::kClassCount),
                                          cfg.data.separation, cfg.data.seed);
  }
  data::CodeTable local;
  data::CodeTable& table = codes ? *codes : local;
  const auto& schema = data::traffic_schema();
  auto train = data::parse_dataset(read_file(cfg.data.train_path), schema, table,
                                   {cfg.data.categorical, data::Split::kTrain});
  auto test = data::parse_dataset(read_file(cfg.data.test_path), schema, table,
                                  {cfg.data.categorical, data::Split::kTest});
  return {std::move(train), std::move(test)};
}

}  // namespace dpfed::federation
