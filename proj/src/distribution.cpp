#include "pbdtest/distribution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pbdtest {

namespace {

constexpr std::int64_t kFactorialTableSize = 256;

const std::array<long double, kFactorialTableSize>& log_factorial_table() {
  static const auto table = [] {
    std::array<long double, kFactorialTableSize> t{};
    long double acc = 0.0L;
    for (std::int64_t k = 1; k < kFactorialTableSize; ++k) {
      acc += std::log(static_cast<long double>(k));
      t[static_cast<std::size_t>(k)] = acc;
    }
    return t;
  }();
  return table;
}

long double log_factorial_ld(std::int64_t k) {
  if (k < 0) throw std::invalid_argument("log_factorial: negative argument");
  if (k < kFactorialTableSize) return log_factorial_table()[static_cast<std::size_t>(k)];
  // Stirling series; the first omitted term is below 1/(1680 k^7).
  const long double x = static_cast<long double>(k);
  const long double inv = 1.0L / x;
  const long double inv2 = inv * inv;
  constexpr long double kHalfLogTwoPi = 0.918938533204672741780329736406L;
  return x * std::log(x) - x + 0.5L * std::log(x) + kHalfLogTwoPi +
         inv * (1.0L / 12 - inv2 * (1.0L / 360 - inv2 * (1.0L / 1260 - inv2 / 1680)));
}

double sum_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

// Trims both ends of `probs` while the discarded mass stays within `budget`.
// Returns the number of entries removed from the front and the mass dropped.
std::pair<std::size_t, double> trim_tails(std::vector<double>& probs, double budget) {
  if (budget <= 0.0 || probs.size() <= 1) return {0, 0.0};
  std::size_t front = 0;
  std::size_t back = probs.size();
  double dropped = 0.0;
  while (back - front > 1) {
    const double left = probs[front];
    const double right = probs[back - 1];
    const double smaller = std::min(left, right);
    if (dropped + smaller > budget) break;
    dropped += smaller;
    if (left <= right) {
      ++front;
    } else {
      --back;
    }
  }
  if (front > 0 || back < probs.size()) {
    probs.erase(probs.begin() + static_cast<std::ptrdiff_t>(back), probs.end());
    probs.erase(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(front));
  }
  return {front, dropped};
}

void check_tail_cut(double tail_cut, bool allow_zero) {
  const bool ok = allow_zero ? (tail_cut >= 0.0 && tail_cut <= 1e-6)
                             : (tail_cut > 0.0 && tail_cut <= 1e-6);
  if (!ok) throw std::invalid_argument("tail_cut out of range: " + std::to_string(tail_cut));
}

}  // namespace

double log_factorial(std::int64_t k) { return static_cast<double>(log_factorial_ld(k)); }

//---------------------------------------------------------------------------//
// ExplicitDistribution
//---------------------------------------------------------------------------//

ExplicitDistribution::ExplicitDistribution(std::int64_t lo, std::vector<double> probs,
                                           double overflow, double omitted_mass)
    : lo_(lo), probs_(std::move(probs)), overflow_(overflow), omitted_(omitted_mass) {
  if (probs_.empty()) throw std::invalid_argument("ExplicitDistribution: empty support");
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("ExplicitDistribution: negative or non-finite mass");
    }
  }
  if (!(overflow_ >= 0.0) || !(omitted_ >= 0.0)) {
    throw std::invalid_argument("ExplicitDistribution: negative overflow or omitted mass");
  }
  const double total = total_mass() + omitted_;
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("ExplicitDistribution: total mass " + std::to_string(total) +
                                " is not 1");
  }
}

ExplicitDistribution ExplicitDistribution::point_mass(std::int64_t x) {
  return ExplicitDistribution(x, {1.0});
}

double ExplicitDistribution::total_mass() const { return sum_of(probs_) + overflow_; }

double ExplicitDistribution::mass_on(Interval interval) const {
  const std::int64_t a = std::max(interval.lo, lo());
  const std::int64_t b = std::min(interval.hi, hi());
  double s = 0.0;
  for (std::int64_t x = a; x <= b; ++x) s += (*this)(x);
  return s;
}

double ExplicitDistribution::max_prob() const {
  return std::max(*std::max_element(probs_.begin(), probs_.end()), overflow_);
}

double ExplicitDistribution::mean() const {
  long double mass = 0.0L, first = 0.0L;
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    mass += probs_[j];
    first += probs_[j] * static_cast<long double>(j);
  }
  if (mass <= 0.0L) return static_cast<double>(lo_);
  return static_cast<double>(static_cast<long double>(lo_) + first / mass);
}

double ExplicitDistribution::variance() const {
  long double mass = 0.0L, first = 0.0L;
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    mass += probs_[j];
    first += probs_[j] * static_cast<long double>(j);
  }
  if (mass <= 0.0L) return 0.0;
  const long double m = first / mass;
  long double second = 0.0L;
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    const long double d = static_cast<long double>(j) - m;
    second += probs_[j] * d * d;
  }
  return static_cast<double>(second / mass);
}

//---------------------------------------------------------------------------//
// Pbd / TranslatedPoissonParams
//---------------------------------------------------------------------------//

Pbd::Pbd(std::vector<double> ps) : ps_(std::move(ps)) {
  for (double p : ps_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("Pbd: probability outside [0, 1]: " + std::to_string(p));
    }
  }
}

double Pbd::mean() const { return sum_of(ps_); }

double Pbd::variance() const {
  double s = 0.0;
  for (double p : ps_) s += p * (1.0 - p);
  return s;
}

double Pbd::third_moment_term() const {
  double s = 0.0;
  for (double p : ps_) s += p * p * p * (1.0 - p);
  return s;
}

TranslatedPoissonParams::TranslatedPoissonParams(double mu, double sigma2)
    : mu_(mu), sigma2_(sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2) || !std::isfinite(mu)) {
    throw std::invalid_argument("TranslatedPoissonParams: sigma2 must be positive and finite");
  }
}

std::int64_t TranslatedPoissonParams::shift() const {
  return static_cast<std::int64_t>(std::floor(mu_ - sigma2_));
}

double TranslatedPoissonParams::rate() const {
  const double d = mu_ - sigma2_;
  return sigma2_ + (d - std::floor(d));
}

//---------------------------------------------------------------------------//
// PMFs
//---------------------------------------------------------------------------//

ExplicitDistribution pbd_pmf(const Pbd& pbd, double tail_cut) {
  check_tail_cut(tail_cut, /*allow_zero=*/true);
  // Trimming happens after every convolution step with an equal share of the
  // budget, so the total dropped mass never exceeds tail_cut.
  const double step_budget = pbd.n() == 0 ? 0.0 : tail_cut / static_cast<double>(pbd.n());
  std::vector<double> cur{1.0};
  std::vector<double> next;
  std::int64_t lo = 0;
  double dropped = 0.0;
  for (double p : pbd.ps()) {
    next.assign(cur.size() + 1, 0.0);
    const double q = 1.0 - p;
    next[0] = q * cur[0];
    for (std::size_t j = 1; j < cur.size(); ++j) next[j] = q * cur[j] + p * cur[j - 1];
    next[cur.size()] = p * cur.back();
    std::swap(cur, next);
    if (step_budget > 0.0) {
      auto [front, d] = trim_tails(cur, step_budget);
      lo += static_cast<std::int64_t>(front);
      dropped += d;
    }
  }
  return ExplicitDistribution(lo, std::move(cur), 0.0, dropped);
}

ExplicitDistribution binomial_pmf(std::int64_t n, double p, double tail_cut) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binomial_pmf: parameters out of range");
  }
  check_tail_cut(tail_cut, /*allow_zero=*/true);
  if (p == 0.0) return ExplicitDistribution::point_mass(0);
  if (p == 1.0) return ExplicitDistribution::point_mass(n);
  const long double lp = std::log(static_cast<long double>(p));
  const long double lq = std::log1p(-static_cast<long double>(p));
  const long double lfn = log_factorial_ld(n);
  std::vector<double> probs(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i) {
    // Grouped so that i and n - i produce bit-identical results when p = 1/2.
    const long double lc = lfn - (log_factorial_ld(i) + log_factorial_ld(n - i));
    const long double a = static_cast<long double>(i) * lp;
    const long double b = static_cast<long double>(n - i) * lq;
    probs[static_cast<std::size_t>(i)] = static_cast<double>(std::exp(lc + (a + b)));
  }
  // Renormalize away the rounding of the log-space terms.
  const double s = sum_of(probs);
  for (double& v : probs) v /= s;
  auto [front, dropped] = trim_tails(probs, tail_cut);
  return ExplicitDistribution(static_cast<std::int64_t>(front), std::move(probs), 0.0, dropped);
}

ExplicitDistribution poisson_pmf(double rate, double tail_cut) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("poisson_pmf: rate must be positive");
  }
  check_tail_cut(tail_cut, /*allow_zero=*/false);
  // Each side may drop at most tail_cut / 2.
  const double l = std::log(2.0 / tail_cut);
  const double low_edge = rate - std::sqrt(2.0 * rate * l);
  const double high_edge = rate + l + std::sqrt(l * l + 2.0 * rate * l);
  // Pr(X <= first - 1) and Pr(X >= last + 1) are both within budget.
  const std::int64_t first =
      low_edge <= 0.0 ? 0 : static_cast<std::int64_t>(std::floor(low_edge)) + 1;
  const std::int64_t last = static_cast<std::int64_t>(std::ceil(high_edge)) - 1;
  const long double llam = std::log(static_cast<long double>(rate));
  std::vector<double> probs(static_cast<std::size_t>(last - first + 1));
  long double total = 0.0L;
  for (std::int64_t x = first; x <= last; ++x) {
    const long double lp =
        -static_cast<long double>(rate) + static_cast<long double>(x) * llam - log_factorial_ld(x);
    const double v = static_cast<double>(std::exp(lp));
    probs[static_cast<std::size_t>(x - first)] = v;
    total += v;
  }
  const double omitted = std::max(0.0, 1.0 - static_cast<double>(total));
  return ExplicitDistribution(first, std::move(probs), 0.0, omitted);
}

ExplicitDistribution translated_poisson_pmf(const TranslatedPoissonParams& tp, double tail_cut) {
  ExplicitDistribution base = poisson_pmf(tp.rate(), tail_cut);
  std::vector<double> probs(base.probs().begin(), base.probs().end());
  return ExplicitDistribution(base.lo() + tp.shift(), std::move(probs), 0.0, base.omitted_mass());
}

Moments pbd_moments(const Pbd& pbd) { return {pbd.mean(), pbd.variance()}; }

//---------------------------------------------------------------------------//
// Distances
//---------------------------------------------------------------------------//

namespace {

template <class Fn>
void for_each_pair(const ExplicitDistribution& p, const ExplicitDistribution& q, Fn&& fn) {
  const std::int64_t lo = std::min(p.lo(), q.lo());
  const std::int64_t hi = std::max(p.hi(), q.hi());
  for (std::int64_t x = lo; x <= hi; ++x) fn(p(x), q(x));
  fn(p.overflow(), q.overflow());
}

}  // namespace

double tv_distance(const ExplicitDistribution& p, const ExplicitDistribution& q) {
  double s = 0.0;
  for_each_pair(p, q, [&](double a, double b) { s += std::abs(a - b); });
  return std::min(1.0, 0.5 * s);
}

double ell2_sq_distance(const ExplicitDistribution& p, const ExplicitDistribution& q) {
  double s = 0.0;
  for_each_pair(p, q, [&](double a, double b) { s += (a - b) * (a - b); });
  return s;
}

double ell_inf_distance(const ExplicitDistribution& p, const ExplicitDistribution& q) {
  double m = 0.0;
  for_each_pair(p, q, [&](double a, double b) { m = std::max(m, std::abs(a - b)); });
  return m;
}

double ell2_sq_distance_on(const ExplicitDistribution& p, const ExplicitDistribution& q,
                           Interval window) {
  double s = 0.0;
  for (std::int64_t x = window.lo; x <= window.hi; ++x) {
    const double d = p(x) - q(x);
    s += d * d;
  }
  return s;
}

Interval effective_support_interval(const ExplicitDistribution& p, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("effective_support_interval: eps must lie in (0, 1)");
  }
  const auto probs = p.probs();
  const std::size_t m = probs.size();
  std::vector<long double> prefix(m + 1, 0.0L);
  for (std::size_t j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + probs[j];
  // Slack absorbs rounding in the prefix sums.
  const long double target = 1.0L - static_cast<long double>(eps) - 1e-12L;
  std::size_t best_len = m + 1;
  std::size_t best_lo = 0;
  std::size_t right = 0;
  for (std::size_t left = 0; left < m; ++left) {
    if (right < left) right = left;
    while (right < m && prefix[right + 1] - prefix[left] < target) ++right;
    if (right == m) break;
    const std::size_t len = right - left + 1;
    if (len < best_len) {
      best_len = len;
      best_lo = left;
    }
  }
  if (best_len > m) {
    // Only possible when the dense block itself carries less than 1 - eps.
    return p.support();
  }
  return {p.lo() + static_cast<std::int64_t>(best_lo),
          p.lo() + static_cast<std::int64_t>(best_lo + best_len) - 1};
}

}  // namespace pbdtest
