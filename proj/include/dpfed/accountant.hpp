#pragma once

// Composed privacy budgets for N clusters each releasing T perturbed models
// with a per-release budget (eps, delta).
//
//   parallel:          (eps, delta)                    disjoint data
//   naive sequential:  (N T eps, N T delta)
//   advanced:          delta_bar = N T delta + slack
//                      eps_bar   = eps sqrt(2 N T ln(1/delta_bar))
//                                  + N T eps (e^eps - 1)
//
// The accountant only reports; it never stops training.

#include <cstddef>
#include <string_view>

namespace dpfed::accountant {

enum class Regime { kParallel, kNaiveSequential, kAdvanced };

std::string_view regime_name(Regime r);

struct PrivacyBudget {
  double epsilon_bar = 0.0;
  /// Always in [0, 1]; see `delta_clamped`.
  double delta_bar = 0.0;
  Regime regime = Regime::kParallel;
  /// True when the raw delta bound exceeded 1 and was clamped.
  bool delta_clamped = false;
};

PrivacyBudget compose_parallel(double epsilon, double delta);
PrivacyBudget compose_naive(double epsilon, double delta, std::size_t clusters,
                            std::size_t rounds);
/// Throws DomainError when N T delta + delta_slack is not in (0, 1).
PrivacyBudget compose_advanced(double epsilon, double delta, std::size_t clusters,
                               std::size_t rounds, double delta_slack);

}  // namespace dpfed::accountant
