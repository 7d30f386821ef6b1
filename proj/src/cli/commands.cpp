#include "dpfed/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpfed/error.hpp"
#include "dpfed/kernels.hpp"
#include "format.hpp"

namespace dpfed::cli {
namespace {

namespace fs = std::filesystem;
using federation::ExperimentConfig;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  writer(out);
  out.flush();
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::size_t threads, std::ostream& out) {
  auto file = config::load_config(config_path);
  ExperimentConfig cfg = file.experiment;
  if (seed) cfg.master_seed = *seed;
  cfg.validate();

  data::CodeTable codes;
  const auto [train, test] = federation::load_datasets(cfg, &codes);
  const auto result = federation::run_experiment(cfg, train, test, {threads, {}});

  const bool emit_codes = cfg.data.kind == federation::DataSource::Kind::kCsv &&
                          cfg.data.categorical == data::CategoricalEncoding::kOrdinal;
  report::write_run_outputs(out_dir, result, emit_codes ? &codes : nullptr);

  out << "tail accuracy " << format_double(result.tail.accuracy) << ", precision "
      << format_double(result.tail.precision) << ", recall "
      << format_double(result.tail.recall) << " over the last " << result.tail.window_records
      << " records\n";
  out << "wrote " << out_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::size_t threads, std::ostream& out,
              std::ostream& err) {
  auto file = config::load_config(config_path);
  if (!file.sweep) throw ValidationError("config has no [sweep] section");
  ExperimentConfig base = file.experiment;
  if (seed) base.master_seed = *seed;

  const auto rows = run_sweep(base, *file.sweep, threads, err);
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  write_file(dir / "sweep.csv",
             [&](std::ostream& o) { report::write_sweep_csv(o, rows, base, *file.sweep); });
  write_file(dir / "sweep_timing.csv", [&](std::ostream& o) {
    report::write_sweep_timing_csv(o, rows, base, *file.sweep);
  });

  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  out << rows.size() << " cells, " << failed << " failed; wrote " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

void gen_data(const GenDataOptions& opts) {
  const auto [train, test] = data::generate_synthetic_split(
      opts.train_per_class, opts.test_per_class, opts.separation, opts.seed);
  ensure_dir(opts.out_dir);
  const fs::path dir(opts.out_dir);
  write_file(dir / "train.csv", [&](std::ostream& o) { data::write_dataset(o, train); });
  write_file(dir / "test.csv", [&](std::ostream& o) { data::write_dataset(o, test); });

  nlohmann::json manifest = {
      {"schema_version", report::kSchemaVersion},
      {"generator", "gaussian_mixture"},
      {"seed", opts.seed},
      {"separation", opts.separation},
      {"train_per_class", opts.train_per_class},
      {"test_per_class", opts.test_per_class},
      {"train_rows", train.size()},
      {"test_rows", test.size()},
      {"categorical", "numeric"},
      {"normalized", true},
  };
  write_file(dir / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
}

std::vector<report::SweepRow> run_sweep(const ExperimentConfig& base,
                                        const config::SweepSpec& spec, std::size_t threads,
                                        std::ostream& log) {
  spec.validate();
  std::map<std::size_t, std::pair<data::Dataset, data::Dataset>> datasets;
  std::map<std::string, report::SweepRow> finished;
  std::vector<report::SweepRow> rows;

  for (auto mechanism : spec.mechanisms) {
    for (double epsilon : spec.epsilons) {
      for (std::size_t clusters : spec.cluster_counts) {
        for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
          ExperimentConfig cfg = base;
          cfg.mechanism = mechanism;
          cfg.epsilon = epsilon;
          cfg.clusters = clusters;
          cfg.master_seed = base.master_seed + rep;

          report::SweepRow row;
          row.mechanism = mechanism;
          row.epsilon = epsilon;
          row.clusters = clusters;
          row.seed = cfg.master_seed;

          ExperimentConfig key_cfg = cfg;
          key_cfg.mechanism = cfg.effective_mechanism();
          const std::string key = config::render_config(key_cfg);
          if (auto it = finished.find(key); it != finished.end()) {
            auto copy = it->second;
            copy.mechanism = mechanism;
            rows.push_back(copy);
            continue;
          }

          log << "cell " << dp::mechanism_name(mechanism) << " eps=" << format_double(epsilon)
              << " N=" << clusters << " seed=" << cfg.master_seed << ": ";
          try {
            cfg.validate();
            auto dit = datasets.find(clusters);
            if (dit == datasets.end()) {
              dit = datasets.emplace(clusters, federation::load_datasets(cfg)).first;
            }
            const auto result = federation::run_experiment(cfg, dit->second.first,
                                                           dit->second.second, {threads, {}});
            row.tail_accuracy = result.tail.accuracy;
            row.tail_precision = result.tail.precision;
            row.tail_recall = result.tail.recall;
            row.wallclock_ms = result.total_ms;
            log << "tail accuracy " << format_double(row.tail_accuracy) << "\n";
          } catch (const DivergenceError& e) {
            row.status = "diverged";
            log << e.what() << "\n";
          } catch (const ValidationError& e) {
            row.status = "invalid";
            log << e.what() << "\n";
          }
          finished.emplace(key, row);
          rows.push_back(row);
        }
      }
    }
  }
  report::sort_rows(rows);
  return rows;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dpfed: differentially private federated learning simulator"};
  app.require_subcommand(1);
  std::string kernels_name;
  app.add_option("--kernels", kernels_name, "Kernel backend: scalar or avx2");

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic train/test CSV pair");
  GenDataOptions gen_opts;
  gen->add_option("--out", gen_opts.out_dir, "Output directory")->capture_default_str();
  gen->add_option("--per-class", gen_opts.train_per_class, "Training rows per class")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--test-per-class", gen_opts.test_per_class, "Test rows per class")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--separation", gen_opts.separation, "Class mean scale")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_opts.seed, "Generator seed")->capture_default_str();

  auto* run_cmd = app.add_subcommand("run", "Train one configuration");
  run_cmd->add_option("--config", config_path, "Config file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--seed", seed, "Override federation.seed");
  run_cmd->add_option("--threads", threads, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run the [sweep] grid of a config");
  sweep_cmd->add_option("--config", config_path, "Config file")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  sweep_cmd->add_option("--seed", seed, "Override the base federation.seed");
  sweep_cmd->add_option("--threads", threads, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* acct = app.add_subcommand("accountant", "Print composed privacy budgets as JSON");
  double epsilon = 0.5, delta = 1e-5, delta_slack = 1e-5;
  std::size_t clusters = 3, rounds = 1000;
  acct->add_option("--config", config_path, "Take the inputs from a config file");
  acct->add_option("--epsilon", epsilon, "Per-round epsilon")->capture_default_str();
  acct->add_option("--delta", delta, "Per-round delta")->capture_default_str();
  acct->add_option("--clusters", clusters, "Cluster count N")->capture_default_str();
  acct->add_option("--rounds", rounds, "Round count T")->capture_default_str();
  acct->add_option("--delta-slack", delta_slack, "Advanced-composition slack")
      ->capture_default_str();

  auto* rep = app.add_subcommand("report", "Summarize a run or sweep output directory");
  rep->add_option("--out", out_dir, "Directory written by run or sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (!kernels_name.empty()) kernels::set_active_backend(kernels::parse_backend(kernels_name));

    if (*gen) {
      gen_data(gen_opts);
      out << "wrote " << gen_opts.out_dir << "\n";
      return kExitOk;
    }
    if (*run_cmd) return cmd_run(config_path, out_dir, seed, threads, out);
    if (*sweep_cmd) return cmd_sweep(config_path, out_dir, seed, threads, out, err);
    if (*acct) {
      if (!config_path.empty()) {
        const auto cfg = config::load_config(config_path).experiment;
        epsilon = cfg.epsilon;
        delta = cfg.delta;
        clusters = cfg.clusters;
        rounds = cfg.rounds;
        delta_slack = cfg.delta_slack;
      }
      out << report::accountant_json(epsilon, delta, clusters, rounds, delta_slack);
      return kExitOk;
    }
    out << report::describe_outputs(out_dir);
    return kExitOk;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace dpfed::cli
