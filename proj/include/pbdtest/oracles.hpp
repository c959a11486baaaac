#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pbdtest/distribution.hpp"

// Slow, independent reference computations. Nothing here calls the fast
// paths it is used to check: PMFs come from outcome enumeration, distances
// from direct sums, and randomness from the standard library engines.
namespace pbdtest::oracles {

struct OracleReport {
  std::string name;
  double oracle_value = 0.0;
  double fast_value = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

OracleReport make_report(std::string name, double oracle_value, double fast_value);
nlohmann::json to_json(const OracleReport& r);

inline constexpr std::size_t kMaxBruteForceN = 20;
inline constexpr std::size_t kMaxPbdClassN = 3;
inline constexpr double kMinGridStep = 0.01;
inline constexpr std::size_t kMaxUnimodalSupport = 60;
inline constexpr int kMinMomentTrials = 10'000;

/// PMF by summing over all 2^n outcome vectors.
ExplicitDistribution brute_force_pbd_pmf(std::span<const double> ps);

/// Direct 1/2 sum |P - Q| over the union of supports and the overflow atom.
double direct_tv(const ExplicitDistribution& p, const ExplicitDistribution& q);

/// Minimum TV from P to PBDs on n <= 3 variables whose means lie on the grid
/// {0, step, 2 step, ...} plus 1.
double exact_tv_to_pbd_class(const ExplicitDistribution& p, std::size_t n, double grid_step);

/// TV from P to the nearest unimodal distribution. For each mode split the
/// mass-constrained L1 projection is solved through its Lagrangian dual: for a
/// fixed multiplier the isotonic problem is an exact DP over candidate values,
/// and the concave dual is maximized by ternary search.
double exact_tv_to_unimodal(const ExplicitDistribution& p);

/// Poissonized counts K_i ~ Poisson(k P(i)) drawn independently per symbol;
/// compares the mean and variance of T_n with their closed forms.
struct MomentCheck {
  double mean = 0.0;
  double variance = 0.0;
  double expected_mean = 0.0;
  double expected_variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  int trials = 0;
};
MomentCheck monte_carlo_moment_check(const ExplicitDistribution& p, const ExplicitDistribution& q,
                                     double k, int trials, std::uint64_t seed);
OracleReport to_report(const MomentCheck& m);

/// Closed forms for the moments of T_n under Poissonization.
double tn_expected_mean(const ExplicitDistribution& p, const ExplicitDistribution& q);
double tn_expected_variance(const ExplicitDistribution& p, const ExplicitDistribution& q, double k);

/// Sweep behind the tester's l2 constants. For TP(mu, sigma^2), |I| is the
/// length of its (1 - eps/10) effective interval; by Cauchy-Schwarz a pair at
/// TV > 0.3 eps has l2^2 > 0.04 eps^2 / |I| on I, giving the per-cell constant
/// 0.04 sigma sqrt(logt(1/eps)) / |I|. The recommended C1 puts the null
/// threshold `margin` standard deviations above zero.
nlohmann::json calibration_report(std::span<const double> eps_grid,
                                  std::span<const double> sigma_grid, double margin = 4.7);

}  // namespace pbdtest::oracles
