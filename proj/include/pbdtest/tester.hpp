#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pbdtest/config.hpp"
#include "pbdtest/distribution.hpp"
#include "pbdtest/learner.hpp"
#include "pbdtest/sampling.hpp"

namespace pbdtest {

enum class Verdict { YesPbd, NoPbd };
enum class Branch { Sparse, Heavy };
enum class Closeness { Close, Far };

const char* to_string(Verdict v);
const char* to_string(Branch b);

/// max(1, ln x); throws for x <= 0.
double truncated_log(double x);

/// Everything needed to replay one base run of the tester.
struct Diagnostics {
  std::string hypothesis;  // "sparse" or "binomial"
  double hypothesis_variance = 0.0;
  double variance_threshold = 0.0;
  std::uint64_t learner_samples = 0;

  // Sparse branch.
  std::optional<Interval> interval;
  std::optional<std::int64_t> chernoff_ceiling;
  double empirical_tv = 0.0;
  double tv_threshold = 0.0;
  std::uint64_t identity_samples = 0;

  // Heavy branch.
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  std::uint64_t moment_samples = 0;
  double dtv_hat = 0.0;
  double dtv_threshold = 0.0;
  double poisson_rate = 0.0;
  std::uint64_t poisson_draws = 0;
  int aborted_draws = 0;
  double t_statistic = 0.0;
  double t_threshold = 0.0;
  std::string reject_reason;
};

struct TestVerdict {
  Verdict verdict = Verdict::NoPbd;
  Branch branch = Branch::Sparse;
  Diagnostics diagnostics;
  std::uint64_t samples_used = 0;
};

/// Majority over independent base runs.
struct AmplifiedVerdict {
  Verdict verdict = Verdict::NoPbd;
  Branch branch = Branch::Sparse;  // branch taken by most runs
  int repetitions = 0;
  int yes_votes = 0;
  std::uint64_t samples_used = 0;
  std::vector<TestVerdict> runs;
};

/// Empirical TV to Q below 0.25 eps means Close. Requires at least
/// ceil(A_tol m / eps^2) samples where m counts Q's atoms (sentinel included).
Closeness simple_tolerant_identity_test(const ExplicitDistribution& q,
                                        std::span<const std::int64_t> samples, double eps,
                                        double A_tol = 10.0);
/// Same decision from binned samples; also reports the empirical TV.
Closeness simple_tolerant_identity_test(const ExplicitDistribution& q, const SampleHistogram& hist,
                                        double eps, double A_tol, double* empirical_tv = nullptr);
std::uint64_t identity_test_sample_count(std::size_t atoms, double eps, double A_tol);

/// Restriction to an interval plus a sentinel for everything outside.
struct Coarsening {
  Interval interval;
  ExplicitDistribution coarsened;

  std::int64_t map(std::int64_t x) const { return interval.contains(x) ? x : kOverflowSymbol; }
  ExplicitDistribution apply(const SampleHistogram& hist) const;
};

/// Interval = smallest interval with mass at least 1 - eps/5 under the hypothesis.
Coarsening coarsen_to_interval(const ExplicitDistribution& hypothesis, double eps);

/// (1/k^2) sum [(K_i - k Q(i))^2 - K_i] over every symbol seen or in Q's support.
double l2_statistic(const SampleHistogram& hist, const ExplicitDistribution& q);

/// TV between TP(mu, sigma2) and the hypothesis, computed from PMFs. The TP
/// tail cut is tied to eps so the error stays far below eps/5.
double numeric_tv_tp_vs_hypothesis(const TranslatedPoissonParams& tp,
                                   const ExplicitDistribution& hypothesis, double eps,
                                   double tail_cut = 1e-9);

double heavy_variance_threshold(double eps, double C);
double l2_sample_rate(double sigma_hat, double eps, double C1);
double l2_threshold(double sigma_hat, double eps, double c_l2);
int amplification_runs(double delta, double B);

/// Heavy branch on an already learned hypothesis. Does not check the branch
/// precondition, so tests can drive it directly.
TestVerdict heavy_case_test(SampleStream& stream, std::int64_t n, const TestConfig& config,
                            const ExplicitDistribution& hypothesis, Diagnostics diagnostics = {});

/// One run of the tester (success probability at least 3/4).
TestVerdict base_test_pbd(SampleStream& stream, std::int64_t n, const TestConfig& config);

/// Amplified tester: amplification_runs(delta, B) base runs on split
/// sub-streams, majority verdict.
AmplifiedVerdict test_pbd(SampleStream& stream, std::int64_t n, const TestConfig& config);

nlohmann::json to_json(const Diagnostics& d);
nlohmann::json to_json(const TestVerdict& v);
nlohmann::json to_json(const AmplifiedVerdict& v, bool include_runs = true);

}  // namespace pbdtest
