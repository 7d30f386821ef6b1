#include "dpfed/dp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dpfed/error.hpp"
#include "dpfed/kernels.hpp"

namespace dpfed::dp {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be non-negative and finite");
  }
}

void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
}

}  // namespace

std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kNone:
      return "none";
    case Mechanism::kGaussian:
      return "gaussian";
    case Mechanism::kLaplace:
      return "laplace";
    case Mechanism::kMomentsAccountant:
      return "ma";
  }
  return "none";
}

Mechanism parse_mechanism(std::string_view name) {
  if (name == "none") return Mechanism::kNone;
  if (name == "gaussian") return Mechanism::kGaussian;
  if (name == "laplace") return Mechanism::kLaplace;
  if (name == "ma" || name == "moments_accountant") return Mechanism::kMomentsAccountant;
  throw ValidationError("unknown mechanism '" + std::string(name) + "'");
}

void DpConfig::validate() const {
  if (mechanism == Mechanism::kNone) {
    if (!(epsilon > 0.0)) throw ValidationError("dp.epsilon must be > 0 or inf");
  } else if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("dp.epsilon must be positive and finite for mechanism " +
                          std::string(mechanism_name(mechanism)));
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("dp.delta must lie in (0, 1)");
  if (!(clip_norm > 0.0)) throw ValidationError("dp.clip_norm must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("model.learning_rate must be positive and finite");
  }
  if (dataset_size == 0) throw ValidationError("federation.per_cluster must be >= 1");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw ValidationError("dp.batch_fraction must lie in (0, 1]");
  }
  if (max_rounds == 0) throw ValidationError("federation.rounds must be >= 1");
}

std::vector<double> clip_update(std::span<const double> update, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ValidationError("clip_norm must be > 0");
  if (!std::all_of(update.begin(), update.end(), [](double v) { return std::isfinite(v); })) {
    throw ValidationError("clip_update: non-finite input");
  }
  std::vector<double> out(update.begin(), update.end());
  const double norm = std::sqrt(kernels::sum_squares(update));
  if (norm > clip_norm) kernels::scale(clip_norm / norm, out);
  return out;
}

double sensitivity(double mu, double clip_norm, std::size_t dataset_size) {
  require_positive(mu, "learning rate");
  require_positive(clip_norm, "clip_norm");
  if (dataset_size == 0) throw DomainError("dataset size must be >= 1");
  return 2.0 * mu * clip_norm / static_cast<double>(dataset_size);
}

NoiseScale gaussian_sigma(double dt, double epsilon, double delta) {
  require_nonnegative(dt, "sensitivity");
  require_positive(epsilon, "epsilon");
  require_open_unit(delta, "delta");
  return {Mechanism::kGaussian, dt * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon};
}

NoiseScale laplace_scale(double dt, double epsilon) {
  require_nonnegative(dt, "sensitivity");
  require_positive(epsilon, "epsilon");
  return {Mechanism::kLaplace, dt / epsilon};
}

NoiseScale ma_sigma(double dt, double epsilon, double delta, double q, std::size_t rounds) {
  require_nonnegative(dt, "sensitivity");
  require_positive(epsilon, "epsilon");
  require_open_unit(delta, "delta");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("batch fraction must lie in (0, 1]");
  if (rounds == 0) throw DomainError("rounds must be >= 1");
  const double t = static_cast<double>(rounds);
  return {Mechanism::kMomentsAccountant,
          dt * std::sqrt(2.0 * q * t * std::log(1.0 / delta)) / epsilon};
}

NoiseScale calibrate(const DpConfig& cfg) {
  cfg.validate();
  if (cfg.mechanism == Mechanism::kNone) return {Mechanism::kNone, 0.0};
  const double dt = sensitivity(cfg.learning_rate, cfg.clip_norm, cfg.dataset_size);
  switch (cfg.mechanism) {
    case Mechanism::kGaussian:
      return gaussian_sigma(dt, cfg.epsilon, cfg.delta);
    case Mechanism::kLaplace:
      return laplace_scale(dt, cfg.epsilon);
    case Mechanism::kMomentsAccountant:
      return ma_sigma(dt, cfg.epsilon, cfg.delta, cfg.batch_fraction, cfg.max_rounds);
    case Mechanism::kNone:
      break;
  }
  return {Mechanism::kNone, 0.0};
}

std::vector<double> sample_noise(Mechanism mechanism, const NoiseScale& scale,
                                 std::size_t dim, Engine& stream) {
  if (dim == 0) throw ValidationError("noise dimension must be >= 1");
  if (scale.mechanism != mechanism) {
    throw ValidationError("noise scale was calibrated for '" +
                          std::string(mechanism_name(scale.mechanism)) +
                          "', not '" + std::string(mechanism_name(mechanism)) + "'");
  }
  if (!(scale.value >= 0.0) || !std::isfinite(scale.value)) {
    throw ValidationError("noise scale must be finite and non-negative");
  }
  std::vector<double> noise(dim, 0.0);
  if (mechanism == Mechanism::kNone || scale.value == 0.0) return noise;

  if (mechanism == Mechanism::kLaplace) {
    // The difference of two i.i.d. Exp(1/b) variables is Laplace(0, b).
    std::exponential_distribution<double> exp(1.0 / scale.value);
    for (double& x : noise) {
      const double a = exp(stream);
      const double b = exp(stream);
      x = a - b;
    }
  } else {
    std::normal_distribution<double> normal(0.0, scale.value);
    for (double& x : noise) x = normal(stream);
  }
  return noise;
}

model::ModelParams perturb(const model::ModelParams& params, std::span<const double> noise) {
  if (noise.size() != params.values.size()) {
    throw LayoutError("perturb: noise has " + std::to_string(noise.size()) +
                      " values, model has " + std::to_string(params.values.size()));
  }
  model::ModelParams out = params;
  kernels::add(params.values, noise, out.values);
  return out;
}

}  // namespace dpfed::dp
