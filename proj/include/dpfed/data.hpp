#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dpfed::data {

inline constexpr std::size_t kFeatureCount = 21;
inline constexpr std::size_t kClassCount = 5;

/// Column contract of a traffic dataset: 21 named features, some of them
/// categorical, and 5 class names. Construct through `make` or
/// `traffic_schema()`; both validate the invariants.
class FeatureSchema {
 public:
  static FeatureSchema make(std::vector<std::string> feature_names,
                            std::vector<std::string> class_names,
                            std::vector<bool> categorical);

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  bool is_categorical(std::size_t column) const { return categorical_.at(column); }
  std::size_t width() const { return feature_names_.size(); }
  std::size_t classes() const { return class_names_.size(); }
  /// Index of `name` in class_names, or nullopt.
  std::optional<int> class_index(std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  FeatureSchema() = default;
  std::vector<std::string> feature_names_;
  std::vector<std::string> class_names_;
  std::vector<bool> categorical_;
};

/// The blockchain traffic schema: duration, protocol_type, service, ...,
/// dst_host_srv_serror_rate; classes normal, DoS, FoT, BP, MitM.
/// protocol_type, service and flag are categorical.
const FeatureSchema& traffic_schema();

struct Sample {
  std::vector<double> features;
  int label = 0;
};

enum class Split { kTrain, kTest };

/// Labeled samples stored as a row-major feature matrix plus a label column.
class Dataset {
 public:
  Dataset(FeatureSchema schema, Split split);
  /// Validates every sample against the schema; throws ValidationError.
  static Dataset from_samples(FeatureSchema schema, Split split,
                              std::span<const Sample> samples);

  const FeatureSchema& schema() const { return schema_; }
  Split split() const { return split_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t width() const { return schema_.width(); }
  bool empty() const { return labels_.empty(); }

  std::span<const double> features(std::size_t row) const {
    return {features_.data() + row * width(), width()};
  }
  std::span<double> mutable_features(std::size_t row) {
    return {features_.data() + row * width(), width()};
  }
  int label(std::size_t row) const { return labels_[row]; }
  Sample sample(std::size_t row) const;

  std::span<const double> feature_matrix() const { return features_; }
  std::span<const int> labels() const { return labels_; }

  void push_back(std::span<const double> features, int label);
  void reserve(std::size_t rows);
  /// New dataset holding rows `indices` of this one, in that order.
  Dataset select(std::span<const std::size_t> indices) const;

 private:
  FeatureSchema schema_;
  Split split_;
  std::vector<double> features_;
  std::vector<int> labels_;
};

struct ClusterDataset {
  std::size_t cluster_id = 0;
  Dataset dataset;
  /// Row indices into the partitioned source dataset.
  std::vector<std::size_t> source_indices;

  std::size_t size() const { return dataset.size(); }
};

/// Per-feature min/max of a training split.
struct NormStats {
  std::vector<double> min;
  std::vector<double> max;
};

/// How categorical columns are read.
enum class CategoricalEncoding {
  kOrdinal,  ///< raw tokens mapped to integer codes through a CodeTable
  kNumeric,  ///< tokens must parse as numbers, like every other column
};

/// Stable token -> code mapping per categorical column. Codes are assigned
/// in first-seen order and never change once assigned, so parsing the
/// training file first and the test file second with the same table gives
/// both splits the same codes.
class CodeTable {
 public:
  int code_for(const std::string& column, const std::string& raw);
  std::optional<int> find(const std::string& column, const std::string& raw) const;
  std::size_t size() const;

  /// "column,raw_value,code" lines after a header, sorted by (column, code).
  void write(std::ostream& out) const;
  static CodeTable read(std::istream& in);

  bool operator==(const CodeTable&) const = default;

 private:
  std::map<std::string, std::map<std::string, int>> codes_;
};

struct ParseOptions {
  CategoricalEncoding categorical = CategoricalEncoding::kOrdinal;
  Split split = Split::kTrain;
};

/// Parses a CSV whose header is the schema's feature names followed by
/// "label". Labels are class names. Throws ParseError (with line number)
/// on malformed rows and LabelError on unknown labels.
Dataset parse_dataset(std::string_view csv_text, const FeatureSchema& schema,
                      CodeTable& codes, const ParseOptions& options = {});

/// Writes `dataset` in the format parse_dataset reads; values round-trip exactly.
void write_dataset(std::ostream& out, const Dataset& dataset);

/// Min-max scales every feature to [0, 1] using `stats` when given, or the
/// dataset's own extrema otherwise. Constant features map to 0.
std::pair<Dataset, NormStats> normalize(const Dataset& dataset,
                                        const std::optional<NormStats>& stats = {});

NormStats compute_stats(const Dataset& dataset);

/// Disjoint uniform-random assignment of `per_cluster` rows to each of
/// `n_clusters` clusters. Throws CapacityError when the dataset is too small.
std::vector<ClusterDataset> partition(const Dataset& dataset, std::size_t n_clusters,
                                      std::size_t per_cluster, std::uint64_t seed);

/// Balanced 5-class Gaussian mixture in 21 dimensions. Each class mean has
/// independent standard-normal coordinates multiplied by `class_separation`;
/// samples add unit-variance spherical noise. Rows cycle through the classes
/// (label = row % 5) and the result is min-max normalized.
Dataset generate_synthetic(std::size_t n_per_class, double class_separation,
                           std::uint64_t seed);

/// Train and test splits drawn from one mixture. The train split is
/// normalized with its own extrema and the test split reuses them.
std::pair<Dataset, Dataset> generate_synthetic_split(std::size_t train_per_class,
                                                     std::size_t test_per_class,
                                                     double class_separation,
                                                     std::uint64_t seed);

}  // namespace dpfed::data
