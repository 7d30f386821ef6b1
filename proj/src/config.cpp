#include "dpfed/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "dpfed/error.hpp"
#include "format.hpp"

namespace dpfed::config {
namespace {

namespace pt = boost::property_tree;
using federation::DataSource;
using federation::ExperimentConfig;
using federation::Normalization;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  if (trim(text).empty()) return items;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    items.push_back(trim(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

bool parse_bool(std::string_view text, const std::string& field) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError(field + ": expected true or false, got '" + std::string(text) + "'");
}

template <typename T, typename F>
T wrap(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(field + ": " + e.what());
  }
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

std::string normalization_name(Normalization n) {
  return n == Normalization::kGlobal ? "global" : "per_cluster";
}

Normalization parse_normalization(std::string_view s, const std::string& field) {
  if (s == "global") return Normalization::kGlobal;
  if (s == "per_cluster") return Normalization::kPerCluster;
  throw ValidationError(field + ": expected global or per_cluster, got '" + std::string(s) +
                        "'");
}

std::string categorical_name(data::CategoricalEncoding c) {
  return c == data::CategoricalEncoding::kOrdinal ? "ordinal" : "numeric";
}

data::CategoricalEncoding parse_categorical(std::string_view s, const std::string& field) {
  if (s == "ordinal") return data::CategoricalEncoding::kOrdinal;
  if (s == "numeric") return data::CategoricalEncoding::kNumeric;
  throw ValidationError(field + ": expected ordinal or numeric, got '" + std::string(s) + "'");
}

void apply_model(const std::string& key, const std::string& value, ExperimentConfig& cfg) {
  const std::string field = "model." + key;
  if (key == "hidden") {
    std::vector<std::size_t> sizes{data::kFeatureCount};
    for (const auto& item : split_list(value)) {
      sizes.push_back(parse_unsigned(item, field));
    }
    sizes.push_back(data::kClassCount);
    cfg.shape = {sizes};
  } else if (key == "activation") {
    cfg.activation = wrap<model::Activation>(field, [&] { return model::parse_activation(value); });
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_real(value, field);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_unsigned(value, field);
  } else {
    throw ValidationError("unknown key '" + field + "'");
  }
}

void apply_dp(const std::string& key, const std::string& value, ExperimentConfig& cfg) {
  const std::string field = "dp." + key;
  if (key == "mechanism") {
    cfg.mechanism = wrap<dp::Mechanism>(field, [&] { return dp::parse_mechanism(value); });
  } else if (key == "epsilon") {
    cfg.epsilon = parse_real(value, field);
  } else if (key == "delta") {
    cfg.delta = parse_real(value, field);
  } else if (key == "clip_norm") {
    cfg.clip_norm = parse_real(value, field);
  } else if (key == "batch_fraction") {
    if (value == "auto") {
      cfg.batch_fraction.reset();
    } else {
      cfg.batch_fraction = parse_real(value, field);
    }
  } else if (key == "delta_slack") {
    cfg.delta_slack = parse_real(value, field);
  } else {
    throw ValidationError("unknown key '" + field + "'");
  }
}

void apply_federation(const std::string& key, const std::string& value,
                      ExperimentConfig& cfg) {
  const std::string field = "federation." + key;
  if (key == "clusters") {
    cfg.clusters = parse_unsigned(value, field);
  } else if (key == "rounds") {
    cfg.rounds = parse_unsigned(value, field);
  } else if (key == "per_cluster") {
    cfg.per_cluster = parse_unsigned(value, field);
  } else if (key == "seed") {
    cfg.master_seed = parse_unsigned(value, field);
  } else if (key == "eval_every") {
    cfg.eval_every = parse_unsigned(value, field);
  } else if (key == "tail_window") {
    cfg.tail_window = parse_unsigned(value, field);
  } else if (key == "per_cluster_eval") {
    cfg.per_cluster_eval = parse_bool(value, field);
  } else if (key == "normalization") {
    cfg.normalization = parse_normalization(value, field);
  } else {
    throw ValidationError("unknown key '" + field + "'");
  }
}

void apply_data(const std::string& key, const std::string& value, ExperimentConfig& cfg,
                const std::string& base_dir) {
  const std::string field = "data." + key;
  DataSource& d = cfg.data;
  if (key == "source") {
    if (value == "synthetic") {
      d.kind = DataSource::Kind::kSynthetic;
    } else if (value == "csv") {
      d.kind = DataSource::Kind::kCsv;
    } else {
      throw ValidationError(field + ": expected synthetic or csv, got '" + value + "'");
    }
  } else if (key == "separation") {
    d.separation = parse_real(value, field);
  } else if (key == "train_size") {
    d.train_size = parse_unsigned(value, field);
  } else if (key == "test_size") {
    d.test_size = parse_unsigned(value, field);
  } else if (key == "seed") {
    d.seed = parse_unsigned(value, field);
  } else if (key == "train") {
    d.train_path = resolve(value, base_dir);
  } else if (key == "test") {
    d.test_path = resolve(value, base_dir);
  } else if (key == "categorical") {
    d.categorical = parse_categorical(value, field);
  } else {
    throw ValidationError("unknown key '" + field + "'");
  }
}

void apply_sweep(const std::string& key, const std::string& value, SweepSpec& spec) {
  const std::string field = "sweep." + key;
  if (key == "mechanisms") {
    spec.mechanisms.clear();
    for (const auto& item : split_list(value)) {
      spec.mechanisms.push_back(
          wrap<dp::Mechanism>(field, [&] { return dp::parse_mechanism(item); }));
    }
  } else if (key == "epsilons") {
    spec.epsilons.clear();
    for (const auto& item : split_list(value)) spec.epsilons.push_back(parse_real(item, field));
  } else if (key == "clusters") {
    spec.cluster_counts.clear();
    for (const auto& item : split_list(value)) {
      spec.cluster_counts.push_back(parse_unsigned(item, field));
    }
  } else if (key == "repetitions") {
    spec.repetitions = parse_unsigned(value, field);
  } else {
    throw ValidationError("unknown key '" + field + "'");
  }
}

}  // namespace

double parse_real(std::string_view text, const std::string& field) {
  const std::string s = trim(text);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || std::isnan(v)) {
    throw ValidationError(field + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, const std::string& field) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(field + ": expected a non-negative integer, got '" +
                          std::string(text) + "'");
  }
  return v;
}

void SweepSpec::validate() const {
  if (mechanisms.empty()) throw ValidationError("sweep.mechanisms must not be empty");
  if (epsilons.empty()) throw ValidationError("sweep.epsilons must not be empty");
  if (cluster_counts.empty()) throw ValidationError("sweep.clusters must not be empty");
  if (repetitions == 0) throw ValidationError("sweep.repetitions must be >= 1");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ValidationError("sweep.epsilons must all be > 0 or inf");
  }
  for (std::size_t n : cluster_counts) {
    if (n == 0) throw ValidationError("sweep.clusters must all be >= 1");
  }
}

ConfigFile parse_config(std::string_view text, const std::string& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.line(), "config: " + e.message());
  }

  ConfigFile file;
  ExperimentConfig& cfg = file.experiment;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ValidationError("key '" + section + "' must be inside a section");
    }
    if (section != "model" && section != "dp" && section != "federation" &&
        section != "data" && section != "sweep") {
      throw ValidationError("unknown section '[" + section + "]'");
    }
    if (section == "sweep" && !file.sweep) file.sweep.emplace();
    for (const auto& [key, node] : body) {
      const std::string value = trim(node.data());
      if (section == "model") {
        apply_model(key, value, cfg);
      } else if (section == "dp") {
        apply_dp(key, value, cfg);
      } else if (section == "federation") {
        apply_federation(key, value, cfg);
      } else if (section == "data") {
        apply_data(key, value, cfg, base_dir);
      } else {
        apply_sweep(key, value, *file.sweep);
      }
    }
  }

  if (file.sweep) {
    if (file.sweep->mechanisms.empty()) file.sweep->mechanisms = {cfg.mechanism};
    if (file.sweep->epsilons.empty()) file.sweep->epsilons = {cfg.epsilon};
    if (file.sweep->cluster_counts.empty()) file.sweep->cluster_counts = {cfg.clusters};
    file.sweep->validate();
  }
  cfg.validate();
  return file;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::vector<Entry> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::string> hidden;
  for (std::size_t l = 1; l + 1 < cfg.shape.sizes.size(); ++l) {
    hidden.push_back(std::to_string(cfg.shape.sizes[l]));
  }
  const auto& d = cfg.data;
  std::vector<Entry> e{
      {"model", "hidden", join(hidden)},
      {"model", "activation", std::string(model::activation_name(cfg.activation))},
      {"model", "learning_rate", format_double(cfg.learning_rate)},
      {"model", "batch_size", std::to_string(cfg.batch_size)},
      {"dp", "mechanism", std::string(dp::mechanism_name(cfg.mechanism))},
      {"dp", "epsilon", format_double(cfg.epsilon)},
      {"dp", "delta", format_double(cfg.delta)},
      {"dp", "clip_norm", format_double(cfg.clip_norm)},
      {"dp", "batch_fraction",
       cfg.batch_fraction ? format_double(*cfg.batch_fraction) : std::string("auto")},
      {"dp", "delta_slack", format_double(cfg.delta_slack)},
      {"federation", "clusters", std::to_string(cfg.clusters)},
      {"federation", "rounds", std::to_string(cfg.rounds)},
      {"federation", "per_cluster", std::to_string(cfg.per_cluster)},
      {"federation", "seed", std::to_string(cfg.master_seed)},
      {"federation", "eval_every", std::to_string(cfg.eval_every)},
      {"federation", "tail_window", std::to_string(cfg.tail_window)},
      {"federation", "per_cluster_eval", cfg.per_cluster_eval ? "true" : "false"},
      {"federation", "normalization", normalization_name(cfg.normalization)},
  };
  if (d.kind == DataSource::Kind::kSynthetic) {
    e.push_back({"data", "source", "synthetic"});
    e.push_back({"data", "separation", format_double(d.separation)});
    e.push_back({"data", "train_size", std::to_string(d.train_size)});
    e.push_back({"data", "test_size", std::to_string(d.test_size)});
    e.push_back({"data", "seed", std::to_string(d.seed)});
  } else {
    e.push_back({"data", "source", "csv"});
    e.push_back({"data", "train", d.train_path});
    e.push_back({"data", "test", d.test_path});
    e.push_back({"data", "categorical", categorical_name(d.categorical)});
  }
  return e;
}

std::vector<Entry> sweep_entries(const SweepSpec& spec) {
  std::vector<std::string> mechs, eps, clusters;
  for (auto m : spec.mechanisms) mechs.emplace_back(dp::mechanism_name(m));
  for (double v : spec.epsilons) eps.push_back(format_double(v));
  for (auto n : spec.cluster_counts) clusters.push_back(std::to_string(n));
  return {{"sweep", "mechanisms", join(mechs)},
          {"sweep", "epsilons", join(eps)},
          {"sweep", "clusters", join(clusters)},
          {"sweep", "repetitions", std::to_string(spec.repetitions)}};
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& entry : config_entries(cfg)) {
    if (entry.section != section) {
      if (!section.empty()) out += '\n';
      section = entry.section;
      out += '[' + section + "]\n";
    }
    out += entry.key + " = " + entry.value + '\n';
  }
  return out;
}

}  // namespace dpfed::config
