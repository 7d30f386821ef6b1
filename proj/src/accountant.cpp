#include "dpfed/accountant.hpp"

#include <cmath>
#include <string>

#include "dpfed/error.hpp"

namespace dpfed::accountant {
namespace {

void check_inputs(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("epsilon must be positive and finite");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
}

void check_counts(std::size_t clusters, std::size_t rounds) {
  if (clusters == 0 || rounds == 0) throw DomainError("clusters and rounds must be >= 1");
}

}  // namespace

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::kParallel:
      return "parallel";
    case Regime::kNaiveSequential:
      return "naive_sequential";
    case Regime::kAdvanced:
      return "advanced";
  }
  return "parallel";
}

PrivacyBudget compose_parallel(double epsilon, double delta) {
  check_inputs(epsilon, delta);
  return {epsilon, delta, Regime::kParallel, false};
}

PrivacyBudget compose_naive(double epsilon, double delta, std::size_t clusters,
                            std::size_t rounds) {
  check_inputs(epsilon, delta);
  check_counts(clusters, rounds);
  const double k = static_cast<double>(clusters) * static_cast<double>(rounds);
  const double raw_delta = k * delta;
  return {k * epsilon, raw_delta > 1.0 ? 1.0 : raw_delta, Regime::kNaiveSequential,
          raw_delta > 1.0};
}

PrivacyBudget compose_advanced(double epsilon, double delta, std::size_t clusters,
                               std::size_t rounds, double delta_slack) {
  check_inputs(epsilon, delta);
  check_counts(clusters, rounds);
  if (!(delta_slack >= 0.0) || !std::isfinite(delta_slack)) {
    throw DomainError("delta_slack must be non-negative and finite");
  }
  const double k = static_cast<double>(clusters) * static_cast<double>(rounds);
  const double delta_bar = k * delta + delta_slack;
  if (!(delta_bar < 1.0)) {
    throw DomainError("advanced composition needs N*T*delta + delta_slack < 1, got " +
                      std::to_string(delta_bar));
  }
  const double eps_bar = epsilon * std::sqrt(2.0 * k * std::log(1.0 / delta_bar)) +
                         k * epsilon * std::expm1(epsilon);
  return {eps_bar, delta_bar, Regime::kAdvanced, false};
}

}  // namespace dpfed::accountant
