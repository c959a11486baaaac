#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbdtest/config.hpp"
#include "pbdtest/distribution.hpp"
#include "pbdtest/rng.hpp"

namespace pbdtest {

/// Binomial(n, 1/2) with mass moved between mirror-image points:
///   Q(i)     = (1 - c eps z_i) P0(i)       for i < n/2
///   Q(n/2)   = P0(n/2)
///   Q(n - i) = (1 + c eps z_i) P0(n - i)  for i < n/2
/// Since P0 is symmetric, every sign vector z conserves mass.
struct PerturbedBinomial {
  std::int64_t n = 2;
  double c = 1.0;
  double eps = 0.0;
  std::vector<int> z;  // length n/2, entries +1 or -1

  void validate() const;
};

ExplicitDistribution construct_perturbed_binomial(const PerturbedBinomial& pb);

/// Uniform random sign vector.
std::vector<int> random_signs(std::size_t count, SplitMix64& rng);

/// [n/2 - 4 sqrt(n), n/2 + 4 sqrt(n)] clipped to [0, n].
Interval lower_bound_window(std::int64_t n);

/// Certified lower bound v on sum |Q - U| over unimodal U, so TV(Q, U) >= v/2.
///
/// For each mode position, disjoint adjacent pairs left of the mode credit
/// every drop and pairs right of it credit every rise; a unimodal U must pay
/// at least that much on each pair. The best pairing per side comes from a
/// linear DP and the bound is the minimum over mode positions. Points outside
/// `window` earn no credit.
double unimodal_distance_lb(const ExplicitDistribution& q, Interval window);

/// sum_{i < n/2} P0(i)^2 for Binomial(n, 1/2).
double half_collision_mass(std::int64_t n);

/// Upper bound on the TV between k-Poissonized sample processes from P0 and
/// from the mixture over z: 2 TV^2 <= ln E[LR] <= 2 c^4 eps^4 k^2 S, with S
/// from half_collision_mass. Clipped to 1.
double chi2_indistinguishability_bound(std::int64_t n, double c, double eps, double k);

/// Largest c' <= c with c' eps < 1 leaving room for a positive Q.
double admissible_c(double c, double eps);
/// Whether (n, c, eps) lies in the regime where the construction's far-ness
/// argument applies: c > 200 and eps > 100 / sqrt(n).
bool lower_bound_regime_met(std::int64_t n, double c, double eps);

struct DetectionRow {
  double k_cap = 0.0;
  bool full_budget = false;
  double sample_scale = 1.0;
  double mean_samples = 0.0;
  std::uint64_t max_samples = 0;
  double detect_rate = 0.0;
  double false_reject_rate = 0.0;
  double advantage = 0.0;
  double advantage_se = 0.0;
  double chi2_bound = 0.0;  // at max_samples
  double lr_advantage = 0.0;
  double lr_se = 0.0;
  double lr_chi2_bound = 0.0;  // at k_cap
};

struct DetectionSettings {
  std::int64_t n = 4096;
  double c = 1.0;
  double eps = 0.2;
  std::vector<double> k_grid;
  bool include_full_budget = true;
  int trials = 100;
  TestConfig config;  // eps is overwritten by `eps`
};

struct DetectionReport {
  double c_used = 0.0;
  bool c_scaled = false;
  bool regime_met = false;
  double full_budget = 0.0;
  std::vector<DetectionRow> rows;
};

/// Planned samples of one amplified test_pbd call on Binomial(n, 1/2).
double planned_full_budget(std::int64_t n, const TestConfig& config);

/// Runs test_pbd against P0 and against fresh random members of the family at
/// each budget cap, and a likelihood-ratio discriminator on k_cap Poissonized
/// samples. Stage sizes are multiplied by cap / full budget.
DetectionReport detection_experiment(const DetectionSettings& settings);

/// Fraction of trials in which the Bayes likelihood-ratio rule picks the right
/// source, minus the error on P0: the empirical advantage of the optimal test.
struct LrResult {
  double advantage = 0.0;
  double se = 0.0;
};
LrResult likelihood_ratio_advantage(std::int64_t n, double c, double eps, double k, int trials,
                                    std::uint64_t seed, int threads = 1);

std::string detection_csv(const DetectionReport& report);
nlohmann::json to_json(const DetectionReport& report);

}  // namespace pbdtest
