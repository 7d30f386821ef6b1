#pragma once

// Fully connected classifier on flat parameter vectors.
//
// Canonical layout (part of the public contract; the DP and federation
// layers work on the flat vector directly): for each layer l in order, the
// weight matrix W_l stored row-major as [fan_in][fan_out], followed by the
// bias vector b_l of length fan_out. Layer l computes
//   z = x * W_l + b_l
// with x a row vector, then applies the hidden activation (all layers but
// the last) or softmax (last layer).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpfed::model {

enum class Activation { kRelu, kTanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// Layer widths, input first, classes last; e.g. {21, 128, 128, 5}.
struct LayerShape {
  std::vector<std::size_t> sizes;

  std::size_t inputs() const { return sizes.front(); }
  std::size_t outputs() const { return sizes.back(); }
  std::size_t layers() const { return sizes.size() - 1; }
  /// Sum over layers of fan_in * fan_out + fan_out.
  std::size_t parameter_count() const;
  /// Offset of W_l in the flat vector; the bias follows the weights.
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;
  /// Throws ValidationError unless there are >= 2 widths, all >= 1.
  void validate() const;

  bool operator==(const LayerShape&) const = default;
};

struct ModelParams {
  LayerShape shape;
  Activation activation = Activation::kRelu;
  std::vector<double> values;

  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);

  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;
};

/// Same layout as ModelParams::values.
struct Gradient {
  std::vector<double> values;
};

/// Row-major batch of `rows` feature vectors of width `width` plus labels.
struct BatchView {
  std::span<const double> features;
  std::span<const int> labels;
  std::size_t width = 0;

  std::size_t rows() const { return labels.size(); }
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ModelParams init_model(const LayerShape& shape, std::uint64_t seed,
                       Activation activation = Activation::kRelu);

/// Class probabilities for one feature vector.
std::vector<double> forward(const ModelParams& params, std::span<const double> features);

/// Class probabilities for a row-major batch; result is rows x classes.
std::vector<double> forward_batch(const ModelParams& params, std::span<const double> features,
                                  std::size_t rows);

struct LossAndGradient {
  double loss = 0.0;
  Gradient grad;
};

/// Mean softmax cross-entropy over the batch and its exact gradient.
LossAndGradient loss_and_gradient(const ModelParams& params, const BatchView& batch);

/// values - mu * grad.
ModelParams sgd_step(const ModelParams& params, const Gradient& grad, double mu);

/// Argmax of the output; ties go to the lowest index.
int predict(const ModelParams& params, std::span<const double> features);
std::vector<int> predict_batch(const ModelParams& params, std::span<const double> features,
                               std::size_t rows);
/// Argmax rule on its own, ties to the lowest index.
int argmax(std::span<const double> probabilities);

/// new - old, elementwise.
std::vector<double> param_delta(const ModelParams& updated, const ModelParams& previous);

// Checkpoint file: magic "DPFEDMDL", u32 format version, u32 activation,
// u32 width count, u64 per width, u64 value count, then the values as
// little-endian IEEE-754 binary64. Round trips are bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace dpfed::model
