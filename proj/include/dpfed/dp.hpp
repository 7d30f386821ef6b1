#pragma once

// Update clipping, noise calibration and noise sampling for the three
// perturbation mechanisms. All calibrations start from the sensitivity of
// one clipped SGD step over a cluster's dataset,
//   dt = 2 * mu * clip_norm / |D|,
// and scale it by the mechanism's privacy factor:
//   Gaussian:           c = dt * sqrt(2 ln(1.25 / delta)) / eps
//   Laplace:            b = dt / eps
//   Moments accountant: c = dt * sqrt(2 q T ln(1 / delta)) / eps
// where q is the batch sampling fraction and T the number of rounds.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dpfed/model.hpp"
#include "dpfed/rng.hpp"

namespace dpfed::dp {

enum class Mechanism { kNone, kGaussian, kLaplace, kMomentsAccountant };

std::string_view mechanism_name(Mechanism m);
/// Accepts none, gaussian, laplace, ma (also "moments_accountant").
Mechanism parse_mechanism(std::string_view name);

struct DpConfig {
  Mechanism mechanism = Mechanism::kNone;
  /// Per-round budget; +inf is allowed only with Mechanism::kNone.
  double epsilon = 0.5;
  double delta = 1e-5;
  double clip_norm = 1.0;
  double learning_rate = 0.0046;
  std::size_t dataset_size = 1470;
  /// Sampling fraction q in (0, 1].
  double batch_fraction = 1024.0 / 1470.0;
  std::size_t max_rounds = 1000;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

struct NoiseScale {
  Mechanism mechanism = Mechanism::kNone;
  /// Standard deviation for Gaussian/MA, Laplace scale b for Laplace.
  double value = 0.0;
};

/// delta * min(1, clip_norm / ||delta||_2). The zero vector is returned as is.
std::vector<double> clip_update(std::span<const double> update, double clip_norm);

double sensitivity(double mu, double clip_norm, std::size_t dataset_size);
NoiseScale gaussian_sigma(double dt, double epsilon, double delta);
NoiseScale laplace_scale(double dt, double epsilon);
NoiseScale ma_sigma(double dt, double epsilon, double delta, double q, std::size_t rounds);

/// Scale for cfg.mechanism from the config's own inputs.
NoiseScale calibrate(const DpConfig& cfg);

/// i.i.d. draws per coordinate: N(0, c^2) for Gaussian and MA, Laplace(0, b)
/// for Laplace, zeros for None. Throws ValidationError if `scale` was
/// produced for a different mechanism.
std::vector<double> sample_noise(Mechanism mechanism, const NoiseScale& scale,
                                 std::size_t dim, Engine& stream);

/// params + noise.
model::ModelParams perturb(const model::ModelParams& params, std::span<const double> noise);

}  // namespace dpfed::dp
