#pragma once

// The dpfed command line: gen-data, run, sweep, accountant, report.
//
// Exit codes: 0 success, 1 validation error, 2 divergence, 3 I/O error.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpfed/config.hpp"
#include "dpfed/report.hpp"

namespace dpfed::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitDivergence = 2;
inline constexpr int kExitIo = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct GenDataOptions {
  std::string out_dir = "data";
  std::size_t train_per_class = 29400;
  std::size_t test_per_class = 12600;
  double separation = 3.0;
  std::uint64_t seed = 2024;
};

/// Writes train.csv, test.csv and manifest.json into opts.out_dir.
void gen_data(const GenDataOptions& opts);

/// Runs every (mechanism, epsilon, clusters, seed) cell of `spec` on top of
/// `base`. Cells that fail validation or diverge are recorded by status and
/// the sweep continues. Rows come back sorted.
std::vector<report::SweepRow> run_sweep(const federation::ExperimentConfig& base,
                                        const config::SweepSpec& spec, std::size_t threads,
                                        std::ostream& log);

}  // namespace dpfed::cli
