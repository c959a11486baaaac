#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pbdtest {

/// Closed integer interval [lo, hi].
struct Interval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::int64_t length() const { return hi - lo + 1; }
  bool contains(std::int64_t x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// A probability mass function on a contiguous integer interval.
///
/// Besides the dense block starting at `lo`, a distribution may carry mass on
/// an overflow sentinel that lies outside every integer support (coarsening
/// sends everything outside an interval there). Truncated PMFs record the mass
/// they dropped as `omitted_mass`; that mass has no location and is never
/// compared by the distance functions.
class ExplicitDistribution {
 public:
  static constexpr double kMassTolerance = 1e-9;

  ExplicitDistribution(std::int64_t lo, std::vector<double> probs,
                       double overflow = 0.0, double omitted_mass = 0.0);

  static ExplicitDistribution point_mass(std::int64_t x);

  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return lo_ + static_cast<std::int64_t>(probs_.size()) - 1; }
  Interval support() const { return {lo(), hi()}; }
  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double overflow() const { return overflow_; }
  double omitted_mass() const { return omitted_; }

  /// Mass at integer x; zero outside [lo, hi].
  double operator()(std::int64_t x) const {
    if (x < lo_ || x > hi()) return 0.0;
    return probs_[static_cast<std::size_t>(x - lo_)];
  }

  /// Sum of the dense block plus overflow.
  double total_mass() const;
  double mass_on(Interval interval) const;
  double max_prob() const;

  /// Moments of the integer part, normalized by its own mass.
  double mean() const;
  double variance() const;

  friend bool operator==(const ExplicitDistribution&, const ExplicitDistribution&) = default;

 private:
  std::int64_t lo_;
  std::vector<double> probs_;
  double overflow_;
  double omitted_;
};

/// Parameters (p_1, ..., p_n) of independent Bernoulli variables.
class Pbd {
 public:
  Pbd() = default;
  explicit Pbd(std::vector<double> ps);

  std::size_t n() const { return ps_.size(); }
  std::span<const double> ps() const { return ps_; }
  double mean() const;
  double variance() const;
  /// sum p_i^3 (1 - p_i), the numerator term of the translated Poisson bound.
  double third_moment_term() const;

  friend bool operator==(const Pbd&, const Pbd&) = default;

 private:
  std::vector<double> ps_;
};

/// Y = floor(mu - sigma2) + Poisson(sigma2 + frac(mu - sigma2)).
class TranslatedPoissonParams {
 public:
  TranslatedPoissonParams(double mu, double sigma2);

  double mu() const { return mu_; }
  double sigma2() const { return sigma2_; }
  std::int64_t shift() const;
  double rate() const;

  friend bool operator==(const TranslatedPoissonParams&, const TranslatedPoissonParams&) = default;

 private:
  double mu_;
  double sigma2_;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact PMF by sequential convolution. With tail_cut > 0 the running PMF is
/// trimmed at both ends, dropping at most tail_cut in total; the dropped mass
/// is reported through omitted_mass().
ExplicitDistribution pbd_pmf(const Pbd& pbd, double tail_cut = 0.0);

ExplicitDistribution binomial_pmf(std::int64_t n, double p, double tail_cut = 0.0);

/// Poisson(rate) PMF on the interval chosen from the Poisson tail bound so that
/// the omitted mass is at most tail_cut.
ExplicitDistribution poisson_pmf(double rate, double tail_cut);

ExplicitDistribution translated_poisson_pmf(const TranslatedPoissonParams& tp, double tail_cut);

Moments pbd_moments(const Pbd& pbd);

/// 1/2 sum |P(i) - Q(i)| over the union of supports; overflow atoms are
/// compared with each other.
double tv_distance(const ExplicitDistribution& p, const ExplicitDistribution& q);

/// sum (P(i) - Q(i))^2, unhalved.
double ell2_sq_distance(const ExplicitDistribution& p, const ExplicitDistribution& q);
double ell_inf_distance(const ExplicitDistribution& p, const ExplicitDistribution& q);

/// Squared l2 distance restricted to the points of `window`.
double ell2_sq_distance_on(const ExplicitDistribution& p, const ExplicitDistribution& q,
                           Interval window);

/// Smallest interval carrying at least 1 - eps of the mass; ties go to the
/// smallest lo.
Interval effective_support_interval(const ExplicitDistribution& p, double eps);

/// ln(k!) for k >= 0, thread-safe.
double log_factorial(std::int64_t k);

}  // namespace pbdtest
