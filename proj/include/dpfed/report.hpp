#pragma once

// Result files. Every CSV starts with '#' comment lines carrying the schema
// version and the resolved configuration; JSON files carry both as fields.
// Deterministic outputs (metrics.csv, confusion.csv, sweep.csv, the
// checkpoint) never contain wall-clock readings; those go to timing.csv,
// sweep_timing.csv and summary.json.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpfed/config.hpp"
#include "dpfed/data.hpp"
#include "dpfed/federation.hpp"

namespace dpfed::report {

inline constexpr int kSchemaVersion = 1;

void write_config_header(std::ostream& out, const federation::ExperimentConfig& cfg,
                         const config::SweepSpec* sweep = nullptr);

/// iteration,accuracy,precision,recall,mean_loss
void write_metrics_csv(std::ostream& out, const federation::ExperimentResult& result);
/// iteration,elapsed_ms
void write_timing_csv(std::ostream& out, const federation::ExperimentResult& result);
/// iteration,cluster,accuracy (only meaningful with per_cluster_eval)
void write_cluster_metrics_csv(std::ostream& out, const federation::ExperimentResult& result);

std::string summary_json(const federation::ExperimentResult& result);

/// The three composition regimes as a JSON object. Throws DomainError when
/// advanced composition is undefined.
std::string accountant_json(double epsilon, double delta, std::size_t clusters,
                            std::size_t rounds, double delta_slack);

/// Writes metrics.csv, timing.csv, summary.json, confusion.csv, model.ckpt
/// and, when given, codes.csv into `dir` (created if missing).
void write_run_outputs(const std::string& dir, const federation::ExperimentResult& result,
                       const data::CodeTable* codes = nullptr);

struct SweepRow {
  dp::Mechanism mechanism = dp::Mechanism::kNone;
  double epsilon = 0.0;
  std::size_t clusters = 0;
  std::uint64_t seed = 0;
  double tail_accuracy = 0.0;
  double tail_precision = 0.0;
  double tail_recall = 0.0;
  double wallclock_ms = 0.0;
  /// "ok", "diverged" or "invalid"
  std::string status = "ok";
};

/// Sorts rows by (mechanism, epsilon, clusters, seed).
void sort_rows(std::vector<SweepRow>& rows);
/// mechanism,epsilon,clusters,seed,tail_accuracy,tail_precision,tail_recall,status
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const federation::ExperimentConfig& base, const config::SweepSpec& spec);
/// mechanism,epsilon,clusters,seed,wallclock_ms
void write_sweep_timing_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                            const federation::ExperimentConfig& base,
                            const config::SweepSpec& spec);

/// Human-readable digest of a run or sweep output directory.
std::string describe_outputs(const std::string& dir);

}  // namespace dpfed::report
