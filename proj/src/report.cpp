#include "dpfed/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "dpfed/accountant.hpp"
#include "dpfed/error.hpp"
#include "format.hpp"

namespace dpfed::report {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json budget_json(const accountant::PrivacyBudget& b) {
  return {{"regime", std::string(accountant::regime_name(b.regime))},
          {"epsilon_bar", b.epsilon_bar},
          {"delta_bar", b.delta_bar},
          {"delta_clamped", b.delta_clamped}};
}

json config_json(const federation::ExperimentConfig& cfg) {
  json out = json::object();
  for (const auto& e : config::config_entries(cfg)) out[e.section][e.key] = e.value;
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void write_config_header(std::ostream& out, const federation::ExperimentConfig& cfg,
                         const config::SweepSpec* sweep) {
  out << "# dpfed schema_version = " << kSchemaVersion << '\n';
  for (const auto& e : config::config_entries(cfg)) {
    out << "# " << e.section << '.' << e.key << " = " << e.value << '\n';
  }
  if (sweep) {
    for (const auto& e : config::sweep_entries(*sweep)) {
      out << "# " << e.section << '.' << e.key << " = " << e.value << '\n';
    }
  }
}

void write_metrics_csv(std::ostream& out, const federation::ExperimentResult& result) {
  write_config_header(out, result.config);
  out << "iteration,accuracy,precision,recall,mean_loss\n";
  for (const auto& r : result.records) {
    out << r.iteration << ',' << format_double(r.accuracy) << ',' << format_double(r.precision)
        << ',' << format_double(r.recall) << ',' << format_double(r.mean_loss) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const federation::ExperimentResult& result) {
  write_config_header(out, result.config);
  out << "iteration,elapsed_ms\n";
  for (const auto& r : result.records) {
    out << r.iteration << ',' << format_double(r.elapsed_ms) << '\n';
  }
}

void write_cluster_metrics_csv(std::ostream& out, const federation::ExperimentResult& result) {
  write_config_header(out, result.config);
  out << "iteration,cluster,accuracy\n";
  for (const auto& r : result.records) {
    for (std::size_t n = 0; n < r.cluster_accuracy.size(); ++n) {
      out << r.iteration << ',' << n << ',' << format_double(r.cluster_accuracy[n]) << '\n';
    }
  }
}

std::string summary_json(const federation::ExperimentResult& result) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_json(result.config);
  j["tail"] = {{"window_records", result.tail.window_records},
               {"accuracy", result.tail.accuracy},
               {"precision", result.tail.precision},
               {"recall", result.tail.recall}};
  const auto& cm = result.final_confusion;
  j["final"] = {{"iteration", result.config.rounds},
                {"accuracy", metrics::accuracy(cm)},
                {"precision", metrics::macro_precision(cm)},
                {"recall", metrics::macro_recall(cm)}};
  j["sensitivity"] = result.sensitivity;
  j["noise"] = {{"mechanism", std::string(dp::mechanism_name(result.noise.mechanism))},
                {"scale", result.noise.value}};
  if (result.budgets) {
    const auto& b = *result.budgets;
    json budgets;
    budgets["parallel"] = budget_json(b.parallel);
    budgets["naive_sequential"] = budget_json(b.naive);
    if (b.advanced) {
      budgets["advanced"] = budget_json(*b.advanced);
    } else {
      budgets["advanced"] = {{"regime", "advanced"}, {"error", b.advanced_error}};
    }
    j["budgets"] = budgets;
  } else {
    j["budgets"] = nullptr;
  }
  j["records"] = result.records.size();
  j["total_ms"] = result.total_ms;
  return j.dump(2) + "\n";
}

std::string accountant_json(double epsilon, double delta, std::size_t clusters,
                            std::size_t rounds, double delta_slack) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["input"] = {{"epsilon", epsilon},
                {"delta", delta},
                {"clusters", clusters},
                {"rounds", rounds},
                {"delta_slack", delta_slack}};
  j["parallel"] = budget_json(accountant::compose_parallel(epsilon, delta));
  j["naive_sequential"] =
      budget_json(accountant::compose_naive(epsilon, delta, clusters, rounds));
  j["advanced"] = budget_json(
      accountant::compose_advanced(epsilon, delta, clusters, rounds, delta_slack));
  return j.dump(2) + "\n";
}

void write_run_outputs(const std::string& dir, const federation::ExperimentResult& result,
                       const data::CodeTable* codes) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const fs::path base(dir);

  auto emit = [&](const char* name, auto&& writer) {
    const fs::path path = base / name;
    auto out = open_out(path);
    writer(out);
    finish(out, path);
  };
  emit("metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, result); });
  emit("timing.csv", [&](std::ostream& o) { write_timing_csv(o, result); });
  if (result.config.per_cluster_eval) {
    emit("cluster_metrics.csv", [&](std::ostream& o) { write_cluster_metrics_csv(o, result); });
  }
  emit("summary.json", [&](std::ostream& o) { o << summary_json(result); });
  emit("confusion.csv", [&](std::ostream& o) {
    write_config_header(o, result.config);
    metrics::write_confusion_csv(o, result.final_confusion,
                                 data::traffic_schema().class_names());
  });
  model::save_checkpoint((base / "model.ckpt").string(), result.final_params);
  if (codes) {
    emit("codes.csv", [&](std::ostream& o) { codes->write(o); });
  }
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tuple(static_cast<int>(a.mechanism), a.epsilon, a.clusters, a.seed) <
           std::tuple(static_cast<int>(b.mechanism), b.epsilon, b.clusters, b.seed);
  });
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const federation::ExperimentConfig& base, const config::SweepSpec& spec) {
  write_config_header(out, base, &spec);
  out << "mechanism,epsilon,clusters,seed,tail_accuracy,tail_precision,tail_recall,status\n";
  for (const auto& r : rows) {
    out << dp::mechanism_name(r.mechanism) << ',' << format_double(r.epsilon) << ','
        << r.clusters << ',' << r.seed << ',';
    if (r.status == "ok") {
      out << format_double(r.tail_accuracy) << ',' << format_double(r.tail_precision) << ','
          << format_double(r.tail_recall);
    } else {
      out << ",,";
    }
    out << ',' << r.status << '\n';
  }
}

void write_sweep_timing_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                            const federation::ExperimentConfig& base,
                            const config::SweepSpec& spec) {
  write_config_header(out, base, &spec);
  out << "mechanism,epsilon,clusters,seed,wallclock_ms\n";
  for (const auto& r : rows) {
    out << dp::mechanism_name(r.mechanism) << ',' << format_double(r.epsilon) << ','
        << r.clusters << ',' << r.seed << ',' << format_double(r.wallclock_ms) << '\n';
  }
}

std::string describe_outputs(const std::string& dir) {
  const fs::path base(dir);
  std::ostringstream out;
  bool found = false;

  if (std::ifstream in(base / "summary.json"); in) {
    found = true;
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("summary.json: " + std::string(e.what()));
    }
    const auto& cfg = j.at("config");
    out << "run: mechanism=" << cfg.at("dp").at("mechanism").get<std::string>()
        << " epsilon=" << cfg.at("dp").at("epsilon").get<std::string>()
        << " clusters=" << cfg.at("federation").at("clusters").get<std::string>()
        << " rounds=" << cfg.at("federation").at("rounds").get<std::string>()
        << " seed=" << cfg.at("federation").at("seed").get<std::string>() << '\n';
    const auto& tail = j.at("tail");
    out << "tail (" << tail.at("window_records").get<std::size_t>() << " records):"
        << " accuracy=" << format_double(tail.at("accuracy").get<double>())
        << " precision=" << format_double(tail.at("precision").get<double>())
        << " recall=" << format_double(tail.at("recall").get<double>()) << '\n';
    out << "noise: " << j.at("noise").at("mechanism").get<std::string>()
        << " scale=" << format_double(j.at("noise").at("scale").get<double>()) << '\n';
    if (!j.at("budgets").is_null()) {
      for (const char* regime : {"parallel", "naive_sequential", "advanced"}) {
        const auto& b = j.at("budgets").at(regime);
        out << "budget " << regime << ": ";
        if (b.contains("error")) {
          out << b.at("error").get<std::string>() << '\n';
        } else {
          out << "epsilon_bar=" << format_double(b.at("epsilon_bar").get<double>())
              << " delta_bar=" << format_double(b.at("delta_bar").get<double>()) << '\n';
        }
      }
    }
    out << "total_ms: " << format_double(j.at("total_ms").get<double>()) << '\n';
  }

  if (std::ifstream in(base / "sweep.csv"); in) {
    found = true;
    struct Cell {
      double acc = 0, prec = 0, rec = 0;
      std::size_t ok = 0, failed = 0;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Cell> cells;
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (header) {
        header = false;
        continue;
      }
      const auto f = split_csv_line(line);
      if (f.size() < 8) throw ValidationError("sweep.csv: malformed row '" + line + "'");
      const auto key = std::tuple(f[0], f[1], f[2]);
      if (!cells.count(key)) order.push_back(key);
      auto& c = cells[key];
      if (f[7] == "ok") {
        c.acc += config::parse_real(f[4], "tail_accuracy");
        c.prec += config::parse_real(f[5], "tail_precision");
        c.rec += config::parse_real(f[6], "tail_recall");
        ++c.ok;
      } else {
        ++c.failed;
      }
    }
    out << "mechanism,epsilon,clusters,seeds_ok,seeds_failed,mean_tail_accuracy,"
           "mean_tail_precision,mean_tail_recall\n";
    for (const auto& key : order) {
      const auto& c = cells[key];
      out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
          << c.ok << ',' << c.failed;
      if (c.ok) {
        const double n = static_cast<double>(c.ok);
        out << ',' << format_double(c.acc / n) << ',' << format_double(c.prec / n) << ','
            << format_double(c.rec / n);
      } else {
        out << ",,,";
      }
      out << '\n';
    }
  }

  if (!found) throw IoError("no summary.json or sweep.csv in '" + dir + "'");
  return out.str();
}

}  // namespace dpfed::report
