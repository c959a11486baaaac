#pragma once

#include <cstdint>
#include <variant>

#include "pbdtest/config.hpp"
#include "pbdtest/distribution.hpp"
#include "pbdtest/sampling.hpp"

namespace pbdtest {

struct MomentEstimates {
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double eps_prime = 0.0;
  std::uint64_t samples_used = 0;
};

/// Empirical mean and unbiased variance of ceil(A_m / eps_prime^2) fresh draws.
MomentEstimates estimate_mean_var(SampleStream& stream, double eps_prime, double A_m = 200.0,
                                  double sample_scale = 1.0);

/// Mean and unbiased variance of the integer part of a histogram.
Moments histogram_moments(const SampleHistogram& hist);

/// A PBD made of `shift` certain successes plus the Bernoullis in `free`.
struct SparseHypothesis {
  std::int64_t shift = 0;
  Pbd free;
  ExplicitDistribution pmf = ExplicitDistribution::point_mass(0);
  int em_iterations = 0;
};

struct BinomialHypothesis {
  std::int64_t n = 1;
  double p = 0.0;
};

struct LearnedPbd {
  std::variant<SparseHypothesis, BinomialHypothesis> variant;
  std::uint64_t samples_used = 0;
  /// Moments of the learning batch.
  Moments batch_moments;

  bool is_sparse() const { return std::holds_alternative<SparseHypothesis>(variant); }
  /// Exact hypothesis PMF (untruncated).
  ExplicitDistribution pmf() const;
  double variance() const;
  double mean() const;
};

std::uint64_t learner_sample_count(double eps, const LearnerConstants& constants);
std::int64_t sparse_support_cap(double eps, const LearnerConstants& constants);

/// Proper learner: the hypothesis is always a PBD. One batch of samples
/// yields the moments. High-variance sources get a moment-matched binomial.
/// Otherwise a PBD is fitted by expectation maximization on a window around
/// the sample mean, wide enough to carry the sample variance; values below
/// the window count as certain successes. When the window had to be capped,
/// a moment-matched binomial competes on empirical TV.
///
/// Guarantees hold only when the source is a PBD; any source gets a
/// well-formed hypothesis.
LearnedPbd learn_pbd(SampleStream& stream, std::int64_t n, double eps,
                     const LearnerConstants& constants = {}, double sample_scale = 1.0);

/// EM fit of `m` Bernoulli means to counts over {0, ..., m}; exposed for tests.
struct EmFit {
  Pbd pbd;
  int iterations = 0;
  double log_likelihood = 0.0;
};
EmFit fit_pbd_em(std::span<const double> counts, const LearnerConstants& constants);

}  // namespace pbdtest
