#include "dpfed/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dpfed/error.hpp"
#include "dpfed/kernels.hpp"
#include "dpfed/rng.hpp"

namespace dpfed::model {
namespace {

void check_layout(const ModelParams& params) {
  params.shape.validate();
  if (params.values.size() != params.shape.parameter_count()) {
    throw LayoutError("model has " + std::to_string(params.values.size()) +
                      " values, shape needs " +
                      std::to_string(params.shape.parameter_count()));
  }
}

void check_input(const ModelParams& params, std::size_t features, std::size_t rows) {
  if (features != rows * params.shape.inputs()) {
    throw ValidationError("expected " + std::to_string(rows) + " x " +
                          std::to_string(params.shape.inputs()) + " features, got " +
                          std::to_string(features) + " values");
  }
}

void activate(Activation a, std::span<double> z) {
  if (a == Activation::kRelu) {
    for (double& v : z) v = v > 0.0 ? v : 0.0;
  } else {
    for (double& v : z) v = std::tanh(v);
  }
}

// Multiplies `grad` by the activation derivative, expressed through the
// activation output h.
void activation_backward(Activation a, std::span<const double> h, std::span<double> grad) {
  if (a == Activation::kRelu) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (!(h[i] > 0.0)) grad[i] = 0.0;
    }
  } else {
    for (std::size_t i = 0; i < h.size(); ++i) grad[i] *= 1.0 - h[i] * h[i];
  }
}

// z = x * W + b for every row.
void dense(const ModelParams& params, std::size_t layer, std::span<const double> x,
           std::size_t rows, std::vector<double>& z) {
  const std::size_t in = params.shape.sizes[layer];
  const std::size_t out = params.shape.sizes[layer + 1];
  const auto b = params.bias(layer);
  z.resize(rows * out);
  for (std::size_t r = 0; r < rows; ++r) std::copy(b.begin(), b.end(), z.begin() + r * out);
  kernels::active().gemm_nn(rows, out, in, x.data(), params.weights(layer).data(), z.data());
}

void softmax_rows(std::span<double> z, std::size_t cols) {
  const std::size_t rows = z.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = z.data() + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
  }
}

// Activations of every layer for a batch; acts[0] is the input.
std::vector<std::vector<double>> forward_all(const ModelParams& params,
                                             std::span<const double> features,
                                             std::size_t rows) {
  const std::size_t layers = params.shape.layers();
  std::vector<std::vector<double>> acts(layers + 1);
  acts[0].assign(features.begin(), features.end());
  for (std::size_t l = 0; l < layers; ++l) {
    dense(params, l, acts[l], rows, acts[l + 1]);
    if (l + 1 < layers) activate(params.activation, acts[l + 1]);
  }
  return acts;
}

}  // namespace

std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- layout

std::size_t LayerShape::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l] * sizes[l + 1] + sizes[l + 1];
  return n;
}

std::size_t LayerShape::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += sizes[l] * sizes[l + 1] + sizes[l + 1];
  return off;
}

std::size_t LayerShape::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + sizes[layer] * sizes[layer + 1];
}

void LayerShape::validate() const {
  if (sizes.size() < 2) throw ValidationError("layer shape needs at least 2 widths");
  for (std::size_t s : sizes) {
    if (s == 0) throw ValidationError("layer widths must be at least 1");
  }
}

std::span<const double> ModelParams::weights(std::size_t layer) const {
  return {values.data() + shape.weight_offset(layer),
          shape.sizes[layer] * shape.sizes[layer + 1]};
}
std::span<const double> ModelParams::bias(std::size_t layer) const {
  return {values.data() + shape.bias_offset(layer), shape.sizes[layer + 1]};
}
std::span<double> ModelParams::weights(std::size_t layer) {
  return {values.data() + shape.weight_offset(layer),
          shape.sizes[layer] * shape.sizes[layer + 1]};
}
std::span<double> ModelParams::bias(std::size_t layer) {
  return {values.data() + shape.bias_offset(layer), shape.sizes[layer + 1]};
}

bool ModelParams::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------- ops

ModelParams init_model(const LayerShape& shape, std::uint64_t seed, Activation activation) {
  shape.validate();
  ModelParams params{shape, activation, std::vector<double>(shape.parameter_count(), 0.0)};
  Engine rng = make_stream(seed, StreamTag::kInit);
  for (std::size_t l = 0; l < shape.layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.sizes[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : params.weights(l)) w = dist(rng);
  }
  return params;
}

std::vector<double> forward_batch(const ModelParams& params, std::span<const double> features,
                                  std::size_t rows) {
  check_layout(params);
  check_input(params, features.size(), rows);
  auto acts = forward_all(params, features, rows);
  std::vector<double> out = std::move(acts.back());
  softmax_rows(out, params.shape.outputs());
  return out;
}

std::vector<double> forward(const ModelParams& params, std::span<const double> features) {
  return forward_batch(params, features, 1);
}

LossAndGradient loss_and_gradient(const ModelParams& params, const BatchView& batch) {
  check_layout(params);
  const std::size_t rows = batch.rows();
  if (rows == 0) throw ValidationError("loss_and_gradient needs a nonempty batch");
  if (batch.width != params.shape.inputs()) {
    throw ValidationError("batch width " + std::to_string(batch.width) +
                          " does not match model input " +
                          std::to_string(params.shape.inputs()));
  }
  check_input(params, batch.features.size(), rows);
  const std::size_t classes = params.shape.outputs();
  for (int y : batch.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ValidationError("label " + std::to_string(y) + " out of range for " +
                            std::to_string(classes) + " classes");
    }
  }

  auto acts = forward_all(params, batch.features, rows);
  const std::size_t layers = params.shape.layers();

  // Log-sum-exp loss; the logits buffer becomes dL/dz for the last layer.
  std::vector<double>& delta = acts[layers];
  const double inv_rows = 1.0 / static_cast<double>(rows);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double* z = delta.data() + r * classes;
    const double mx = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) sum += std::exp(z[j] - mx);
    const double lse = mx + std::log(sum);
    const std::size_t y = static_cast<std::size_t>(batch.labels[r]);
    loss += lse - z[y];
    for (std::size_t j = 0; j < classes; ++j) {
      const double p = std::exp(z[j] - lse);
      z[j] = (p - (j == y ? 1.0 : 0.0)) * inv_rows;
    }
  }
  loss *= inv_rows;

  LossAndGradient result{loss, Gradient{std::vector<double>(params.values.size(), 0.0)}};
  const auto& k = kernels::active();
  std::vector<double> upstream = std::move(delta);
  std::vector<double> transposed;
  std::vector<double> next;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = params.shape.sizes[l];
    const std::size_t out = params.shape.sizes[l + 1];
    double* gw = result.grad.values.data() + params.shape.weight_offset(l);
    double* gb = result.grad.values.data() + params.shape.bias_offset(l);
    k.gemm_tn(rows, out, in, acts[l].data(), upstream.data(), gw);
    for (std::size_t r = 0; r < rows; ++r) k.add(gb, upstream.data() + r * out, gb, out);
    if (l == 0) break;

    const auto w = params.weights(l);
    transposed.resize(in * out);
    for (std::size_t i = 0; i < in; ++i)
      for (std::size_t o = 0; o < out; ++o) transposed[o * in + i] = w[i * out + o];
    next.assign(rows * in, 0.0);
    k.gemm_nn(rows, in, out, upstream.data(), transposed.data(), next.data());
    activation_backward(params.activation, acts[l], next);
    std::swap(upstream, next);
  }
  return result;
}

ModelParams sgd_step(const ModelParams& params, const Gradient& grad, double mu) {
  check_layout(params);
  if (grad.values.size() != params.values.size()) {
    throw LayoutError("gradient has " + std::to_string(grad.values.size()) +
                      " values, model has " + std::to_string(params.values.size()));
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw ValidationError("learning rate must be positive and finite");
  }
  ModelParams next = params;
  kernels::axpy(-mu, grad.values, next.values);
  return next;
}

int argmax(std::span<const double> probabilities) {
  if (probabilities.empty()) throw ValidationError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return static_cast<int>(best);
}

int predict(const ModelParams& params, std::span<const double> features) {
  return argmax(forward(params, features));
}

std::vector<int> predict_batch(const ModelParams& params, std::span<const double> features,
                               std::size_t rows) {
  check_layout(params);
  check_input(params, features.size(), rows);
  constexpr std::size_t kChunk = 512;
  const std::size_t in = params.shape.inputs();
  const std::size_t classes = params.shape.outputs();
  std::vector<int> out;
  out.reserve(rows);
  for (std::size_t start = 0; start < rows; start += kChunk) {
    const std::size_t n = std::min(kChunk, rows - start);
    auto acts = forward_all(params, features.subspan(start * in, n * in), n);
    auto& probs = acts.back();
    softmax_rows(probs, classes);
    for (std::size_t r = 0; r < n; ++r) {
      out.push_back(argmax(std::span<const double>(probs).subspan(r * classes, classes)));
    }
  }
  return out;
}

std::vector<double> param_delta(const ModelParams& updated, const ModelParams& previous) {
  if (updated.shape != previous.shape || updated.values.size() != previous.values.size()) {
    throw LayoutError("param_delta: models have different layouts");
  }
  std::vector<double> delta(updated.values.size());
  kernels::sub(updated.values, previous.values, delta);
  return delta;
}

}  // namespace dpfed::model
