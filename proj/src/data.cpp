#include "dpfed/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "dpfed/error.hpp"
#include "dpfed/rng.hpp"
#include "format.hpp"

namespace dpfed::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view field) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

// ---------------------------------------------------------------- schema

FeatureSchema FeatureSchema::make(std::vector<std::string> feature_names,
                                  std::vector<std::string> class_names,
                                  std::vector<bool> categorical) {
  if (feature_names.size() != kFeatureCount) {
    throw ValidationError("schema needs exactly " + std::to_string(kFeatureCount) +
                          " feature names, got " + std::to_string(feature_names.size()));
  }
  if (class_names.size() != kClassCount) {
    throw ValidationError("schema needs exactly " + std::to_string(kClassCount) +
                          " class names, got " + std::to_string(class_names.size()));
  }
  if (categorical.size() != feature_names.size()) {
    throw ValidationError("categorical flags must match the feature count");
  }
  const std::set<std::string> unique_features(feature_names.begin(), feature_names.end());
  const std::set<std::string> unique_classes(class_names.begin(), class_names.end());
  if (unique_features.size() != feature_names.size() ||
      unique_classes.size() != class_names.size()) {
    throw ValidationError("schema names must be unique");
  }
  if (unique_features.count("label")) {
    throw ValidationError("'label' is reserved for the label column");
  }
  FeatureSchema s;
  s.feature_names_ = std::move(feature_names);
  s.class_names_ = std::move(class_names);
  s.categorical_ = std::move(categorical);
  return s;
}

std::optional<int> FeatureSchema::class_index(std::string_view name) const {
  for (std::size_t i = 0; i < class_names_.size(); ++i) {
    if (class_names_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

const FeatureSchema& traffic_schema() {
  static const FeatureSchema schema = [] {
    std::vector<std::string> names{
        "duration",
        "protocol_type",
        "service",
        "src_bytes",
        "dst_bytes",
        "flag",
        "count",
        "srv_count",
        "serror_rate",
        "same_srv_rate",
        "diff_srv_rate",
        "srv_serror_rate",
        "srv_diff_host_rate",
        "dst_host_count",
        "dst_host_srv_count",
        "dst_host_same_srv_rate",
        "dst_host_diff_srv_rate",
        "dst_host_same_src_port_rate",
        "dst_host_serror_rate",
        "dst_host_srv_diff_host_rate",
        "dst_host_srv_serror_rate",
    };
    std::vector<bool> categorical(names.size(), false);
    categorical[1] = categorical[2] = categorical[5] = true;
    return FeatureSchema::make(std::move(names), {"normal", "DoS", "FoT", "BP", "MitM"},
                               std::move(categorical));
  }();
  return schema;
}

// ---------------------------------------------------------------- dataset

Dataset::Dataset(FeatureSchema schema, Split split)
    : schema_(std::move(schema)), split_(split) {}

Dataset Dataset::from_samples(FeatureSchema schema, Split split,
                              std::span<const Sample> samples) {
  Dataset d(std::move(schema), split);
  d.reserve(samples.size());
  for (const Sample& s : samples) d.push_back(s.features, s.label);
  return d;
}

Sample Dataset::sample(std::size_t row) const {
  const auto f = features(row);
  return Sample{{f.begin(), f.end()}, labels_[row]};
}

void Dataset::push_back(std::span<const double> row, int label) {
  if (row.size() != width()) {
    throw ValidationError("sample has " + std::to_string(row.size()) +
                          " features, schema expects " + std::to_string(width()));
  }
  if (label < 0 || static_cast<std::size_t>(label) >= schema_.classes()) {
    throw ValidationError("label " + std::to_string(label) + " out of range");
  }
  features_.insert(features_.end(), row.begin(), row.end());
  labels_.push_back(label);
}

void Dataset::reserve(std::size_t rows) {
  features_.reserve(rows * width());
  labels_.reserve(rows);
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out(schema_, split_);
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= size()) throw ValidationError("row index out of range");
    out.push_back(features(idx), labels_[idx]);
  }
  return out;
}

// ---------------------------------------------------------------- code table

int CodeTable::code_for(const std::string& column, const std::string& raw) {
  auto& col = codes_[column];
  if (auto it = col.find(raw); it != col.end()) return it->second;
  const int code = static_cast<int>(col.size());
  col.emplace(raw, code);
  return code;
}

std::optional<int> CodeTable::find(const std::string& column,
                                   const std::string& raw) const {
  const auto col = codes_.find(column);
  if (col == codes_.end()) return std::nullopt;
  const auto it = col->second.find(raw);
  if (it == col->second.end()) return std::nullopt;
  return it->second;
}

std::size_t CodeTable::size() const {
  std::size_t n = 0;
  for (const auto& [_, col] : codes_) n += col.size();
  return n;
}

void CodeTable::write(std::ostream& out) const {
  out << "column,raw_value,code\n";
  for (const auto& [column, col] : codes_) {
    std::vector<std::pair<int, std::string>> by_code;
    for (const auto& [raw, code] : col) by_code.emplace_back(code, raw);
    std::sort(by_code.begin(), by_code.end());
    for (const auto& [code, raw] : by_code) {
      out << column << ',' << raw << ',' << code << '\n';
    }
  }
}

CodeTable CodeTable::read(std::istream& in) {
  CodeTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1) {
      if (trim(line) != "column,raw_value,code") {
        throw ParseError(line_no, "expected code table header 'column,raw_value,code'");
      }
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != 3) throw ParseError(line_no, "code table rows need 3 fields");
    int code = 0;
    const auto [ptr, ec] =
        std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), code);
    if (ec != std::errc() || ptr != fields[2].data() + fields[2].size() || code < 0) {
      throw ParseError(line_no, "bad code '" + std::string(fields[2]) + "'");
    }
    table.codes_[std::string(fields[0])][std::string(fields[1])] = code;
  }
  return table;
}

// ---------------------------------------------------------------- csv

Dataset parse_dataset(std::string_view csv_text, const FeatureSchema& schema,
                      CodeTable& codes, const ParseOptions& options) {
  Dataset dataset(schema, options.split);
  const std::size_t width = schema.width();
  std::vector<double> row(width);

  std::size_t line_no = 0;
  bool seen_header = false;
  std::size_t pos = 0;
  while (pos < csv_text.size()) {
    std::size_t end = csv_text.find('\n', pos);
    if (end == std::string_view::npos) end = csv_text.size();
    const std::string_view line = csv_text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);

    if (!seen_header) {
      if (fields.size() != width + 1) {
        throw ParseError(line_no, "header has " + std::to_string(fields.size()) +
                                      " columns, expected " + std::to_string(width + 1));
      }
      for (std::size_t c = 0; c < width; ++c) {
        if (fields[c] != schema.feature_names()[c]) {
          throw ParseError(line_no, "header column " + std::to_string(c + 1) + " is '" +
                                        std::string(fields[c]) + "', expected '" +
                                        schema.feature_names()[c] + "'");
        }
      }
      if (fields[width] != "label") {
        throw ParseError(line_no, "last header column must be 'label'");
      }
      seen_header = true;
      continue;
    }

    if (fields.size() != width + 1) {
      throw ParseError(line_no, "row has " + std::to_string(fields.size()) +
                                    " fields, expected " + std::to_string(width + 1));
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (schema.is_categorical(c) &&
          options.categorical == CategoricalEncoding::kOrdinal) {
        if (fields[c].empty()) {
          throw ParseError(line_no, "empty categorical value in column '" +
                                        schema.feature_names()[c] + "'");
        }
        row[c] = codes.code_for(schema.feature_names()[c], std::string(fields[c]));
        continue;
      }
      const auto value = parse_number(fields[c]);
      if (!value) {
        throw ParseError(line_no, "non-numeric value '" + std::string(fields[c]) +
                                      "' in column '" + schema.feature_names()[c] + "'");
      }
      if (!std::isfinite(*value)) {
        throw ParseError(line_no, "non-finite value in column '" +
                                      schema.feature_names()[c] + "'");
      }
      row[c] = *value;
    }
    const auto label = schema.class_index(fields[width]);
    if (!label) {
      throw LabelError(line_no, "unknown label '" + std::string(fields[width]) + "'");
    }
    dataset.push_back(row, *label);
  }
  if (!seen_header) throw ParseError(1, "missing header row");
  if (dataset.empty()) throw ParseError(line_no, "dataset has no rows");
  return dataset;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  const auto& schema = dataset.schema();
  for (const auto& name : schema.feature_names()) out << name << ',';
  out << "label\n";
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (double v : dataset.features(r)) out << format_double(v) << ',';
    out << schema.class_names()[static_cast<std::size_t>(dataset.label(r))] << '\n';
  }
}

// ---------------------------------------------------------------- normalize

NormStats compute_stats(const Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("cannot compute stats of an empty dataset");
  const std::size_t w = dataset.width();
  NormStats stats{std::vector<double>(dataset.features(0).begin(), dataset.features(0).end()),
                  std::vector<double>(dataset.features(0).begin(), dataset.features(0).end())};
  for (std::size_t r = 1; r < dataset.size(); ++r) {
    const auto f = dataset.features(r);
    for (std::size_t c = 0; c < w; ++c) {
      stats.min[c] = std::min(stats.min[c], f[c]);
      stats.max[c] = std::max(stats.max[c], f[c]);
    }
  }
  return stats;
}

std::pair<Dataset, NormStats> normalize(const Dataset& dataset,
                                        const std::optional<NormStats>& stats) {
  if (dataset.empty()) throw ValidationError("cannot normalize an empty dataset");
  const std::size_t w = dataset.width();
  NormStats used = stats ? *stats : compute_stats(dataset);
  if (used.min.size() != w || used.max.size() != w) {
    throw ValidationError("normalization stats have " + std::to_string(used.min.size()) +
                          " features, dataset has " + std::to_string(w));
  }
  for (std::size_t c = 0; c < w; ++c) {
    if (!(used.min[c] <= used.max[c])) {
      throw ValidationError("normalization stats have min > max for feature " +
                            std::to_string(c));
    }
  }

  Dataset out = dataset;
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto f = out.mutable_features(r);
    for (std::size_t c = 0; c < w; ++c) {
      const double range = used.max[c] - used.min[c];
      f[c] = range > 0.0 ? (f[c] - used.min[c]) / range : 0.0;
    }
  }
  return {std::move(out), std::move(used)};
}

// ---------------------------------------------------------------- partition

std::vector<ClusterDataset> partition(const Dataset& dataset, std::size_t n_clusters,
                                      std::size_t per_cluster, std::uint64_t seed) {
  if (n_clusters == 0 || per_cluster == 0) {
    throw ValidationError("partition needs at least one cluster and one sample per cluster");
  }
  if (n_clusters > dataset.size() / per_cluster) {
    throw CapacityError("cannot draw " + std::to_string(n_clusters) + " x " +
                        std::to_string(per_cluster) + " samples from a dataset of " +
                        std::to_string(dataset.size()));
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng = make_stream(seed, StreamTag::kPartition);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<ClusterDataset> clusters;
  clusters.reserve(n_clusters);
  for (std::size_t n = 0; n < n_clusters; ++n) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(n * per_cluster),
                                 order.begin() + static_cast<std::ptrdiff_t>((n + 1) * per_cluster));
    Dataset part = dataset.select(idx);
    clusters.push_back(ClusterDataset{n, std::move(part), std::move(idx)});
  }
  return clusters;
}

// ---------------------------------------------------------------- synthetic

namespace {

Dataset raw_mixture(std::size_t n_per_class, double class_separation, std::uint64_t seed,
                    Split split) {
  if (n_per_class == 0) throw ValidationError("n_per_class must be at least 1");
  if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
    throw ValidationError("class_separation must be finite and non-negative");
  }
  const std::size_t w = kFeatureCount;
  Engine rng = make_stream(seed, StreamTag::kSynthetic);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> means(kClassCount * w);
  for (double& m : means) m = class_separation * normal(rng);

  Dataset d(traffic_schema(), split);
  d.reserve(n_per_class * kClassCount);
  std::vector<double> row(w);
  for (std::size_t i = 0; i < n_per_class * kClassCount; ++i) {
    const std::size_t label = i % kClassCount;
    for (std::size_t c = 0; c < w; ++c) row[c] = means[label * w + c] + normal(rng);
    d.push_back(row, static_cast<int>(label));
  }
  return d;
}

}  // namespace

Dataset generate_synthetic(std::size_t n_per_class, double class_separation,
                           std::uint64_t seed) {
  return normalize(raw_mixture(n_per_class, class_separation, seed, Split::kTrain)).first;
}

std::pair<Dataset, Dataset> generate_synthetic_split(std::size_t train_per_class,
                                                     std::size_t test_per_class,
                                                     double class_separation,
                                                     std::uint64_t seed) {
  if (train_per_class == 0 || test_per_class == 0) {
    throw ValidationError("train and test splits need at least one sample per class");
  }
  const Dataset all =
      raw_mixture(train_per_class + test_per_class, class_separation, seed, Split::kTrain);
  // Rows cycle through the classes, so any prefix of length 5k is balanced.
  const std::size_t n_train = train_per_class * kClassCount;
  std::vector<std::size_t> train_idx(n_train);
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  std::vector<std::size_t> test_idx(all.size() - n_train);
  std::iota(test_idx.begin(), test_idx.end(), n_train);

  auto [train, stats] = normalize(all.select(train_idx));
  Dataset test_raw(all.schema(), Split::kTest);
  test_raw.reserve(test_idx.size());
  for (std::size_t i : test_idx) test_raw.push_back(all.features(i), all.label(i));
  auto test = normalize(test_raw, stats).first;
  return {std::move(train), std::move(test)};
}

}  // namespace dpfed::data
