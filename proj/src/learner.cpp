#include "pbdtest/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pbdtest {

namespace {

double logt(double x) { return std::max(1.0, std::log(x)); }

std::uint64_t scaled_count(double full, double scale) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(full * scale)));
}

std::vector<double> convolve_all(std::span<const double> ps) {
  std::vector<double> cur{1.0};
  cur.reserve(ps.size() + 1);
  for (double p : ps) {
    cur.push_back(0.0);
    for (std::size_t j = cur.size() - 1; j > 0; --j) cur[j] = (1.0 - p) * cur[j] + p * cur[j - 1];
    cur[0] *= (1.0 - p);
  }
  return cur;
}

// Removes one Bernoulli(p) factor from `full` (length m + 1) into `out`
// (length m). Runs in the direction where the recursion contracts errors.
void deconvolve(std::span<const double> full, double p, std::vector<double>& out) {
  const std::size_t m = full.size() - 1;
  out.assign(m, 0.0);
  if (m == 0) return;
  if (p <= 0.5) {
    const double q = 1.0 - p;
    double prev = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      prev = std::max(0.0, (full[x] - p * prev) / q);
      out[x] = prev;
    }
  } else {
    const double q = 1.0 - p;
    double next = 0.0;
    for (std::size_t x = m; x >= 1; --x) {
      next = std::max(0.0, (full[x] - q * next) / p);
      out[x - 1] = next;
    }
  }
}

// Binomial(n', p) matching the batch mean and, as far as n' <= n allows, the
// batch variance.
BinomialHypothesis fit_binomial(const Moments& moments, std::int64_t n) {
  if (n == 1) return {1, std::clamp(moments.mean, 0.0, 1.0)};
  const double nd = static_cast<double>(n);
  const double p = std::clamp(1.0 - moments.variance / moments.mean, 1.0 / nd, 1.0 - 1.0 / nd);
  const auto n_fit = std::clamp<std::int64_t>(std::llround(moments.mean / p), 1, n);
  // Matching the mean matters more than matching the variance once the trial
  // count hits its cap.
  return {n_fit, std::clamp(moments.mean / static_cast<double>(n_fit), 0.0, 1.0)};
}

}  // namespace

//---------------------------------------------------------------------------//
// Moments
//---------------------------------------------------------------------------//

Moments histogram_moments(const SampleHistogram& hist) {
  const auto counts = hist.counts();
  long double n = 0.0L, first = 0.0L;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    n += counts[j];
    first += static_cast<long double>(counts[j]) * static_cast<long double>(j);
  }
  if (n == 0.0L) return {};
  const long double mean = first / n;
  long double second = 0.0L;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const long double d = static_cast<long double>(j) - mean;
    second += static_cast<long double>(counts[j]) * d * d;
  }
  const long double var = n > 1.0L ? second / (n - 1.0L) : 0.0L;
  return {static_cast<double>(static_cast<long double>(hist.lo()) + mean),
          static_cast<double>(var)};
}

MomentEstimates estimate_mean_var(SampleStream& stream, double eps_prime, double A_m,
                                  double sample_scale) {
  if (!(eps_prime > 0.0 && eps_prime < 1.0)) {
    throw std::invalid_argument("estimate_mean_var: eps_prime must lie in (0, 1)");
  }
  const std::uint64_t count = scaled_count(std::ceil(A_m / (eps_prime * eps_prime)), sample_scale);
  const SampleHistogram hist = stream.draw_histogram(count);
  const Moments m = histogram_moments(hist);
  return {m.mean, m.variance, eps_prime, count};
}

//---------------------------------------------------------------------------//
// EM fit
//---------------------------------------------------------------------------//

EmFit fit_pbd_em(std::span<const double> counts, const LearnerConstants& constants) {
  if (counts.empty()) throw std::invalid_argument("fit_pbd_em: empty counts");
  const std::size_t m = counts.size() - 1;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("fit_pbd_em: no samples");
  if (m == 0) return {Pbd{}, 0, 0.0};

  double mean = 0.0;
  for (std::size_t x = 0; x <= m; ++x) mean += counts[x] * static_cast<double>(x);
  mean /= total;
  double var = 0.0;
  for (std::size_t x = 0; x <= m; ++x) {
    const double d = static_cast<double>(x) - mean;
    var += counts[x] * d * d;
  }
  var /= total;

  // Start from an evenly spread vector matching mean and variance. The spread
  // is never zero: identical means form a fixed point EM cannot leave.
  const double md = static_cast<double>(m);
  const double q = std::clamp(mean / md, 1e-6, 1.0 - 1e-6);
  std::vector<double> t(m, 0.0);
  double t_sq = 0.0;
  if (m > 1) {
    for (std::size_t i = 0; i < m; ++i) {
      t[i] = -1.0 + 2.0 * static_cast<double>(i) / (md - 1.0);
      t_sq += t[i] * t[i];
    }
  }
  const double room = std::min(q, 1.0 - q);
  double d = t_sq > 0.0 ? std::sqrt(std::max(0.0, md * q * (1.0 - q) - var) / t_sq) : 0.0;
  d = std::clamp(d, 1e-3 * room, 0.999 * room);
  std::vector<double> ps(m);
  for (std::size_t i = 0; i < m; ++i) ps[i] = std::clamp(q + d * t[i], 1e-9, 1.0 - 1e-9);

  std::vector<double> ratio(m + 1, 0.0);
  std::vector<double> loo;
  int iter = 0;
  double loglik = 0.0;
  double prev_loglik = -INFINITY;
  for (; iter < constants.em_max_iterations; ++iter) {
    const std::vector<double> pmf = convolve_all(ps);
    loglik = 0.0;
    for (std::size_t x = 0; x <= m; ++x) {
      if (counts[x] > 0.0) {
        ratio[x] = pmf[x] > 0.0 ? counts[x] / pmf[x] : 0.0;
        loglik += pmf[x] > 0.0 ? counts[x] * std::log(pmf[x]) : -INFINITY;
      } else {
        ratio[x] = 0.0;
      }
    }
    // Parameters can keep drifting along flat ridges long after the fitted
    // PMF has settled, so stop on the per-sample likelihood gain.
    if (loglik - prev_loglik < constants.em_tolerance * total) break;
    prev_loglik = loglik;
    std::vector<double> next(m);
    for (std::size_t i = 0; i < m; ++i) {
      deconvolve(pmf, ps[i], loo);
      double acc = 0.0;
      for (std::size_t x = 1; x <= m; ++x) acc += ratio[x] * loo[x - 1];
      next[i] = std::clamp(ps[i] * acc / total, 0.0, 1.0);
    }
    ps.swap(next);
  }
  std::sort(ps.begin(), ps.end());
  return {Pbd(std::move(ps)), iter, loglik};
}

//---------------------------------------------------------------------------//
// Learner
//---------------------------------------------------------------------------//

std::uint64_t learner_sample_count(double eps, const LearnerConstants& c) {
  const double l = logt(1.0 / eps);
  return static_cast<std::uint64_t>(std::ceil(c.A_L * l * l / (eps * eps)));
}

std::int64_t sparse_support_cap(double eps, const LearnerConstants& c) {
  return static_cast<std::int64_t>(std::ceil(c.A_s / (eps * eps * eps)));
}

ExplicitDistribution LearnedPbd::pmf() const {
  if (const auto* s = std::get_if<SparseHypothesis>(&variant)) return s->pmf;
  const auto& b = std::get<BinomialHypothesis>(variant);
  return binomial_pmf(b.n, b.p);
}

double LearnedPbd::variance() const {
  if (const auto* s = std::get_if<SparseHypothesis>(&variant)) return s->free.variance();
  const auto& b = std::get<BinomialHypothesis>(variant);
  return static_cast<double>(b.n) * b.p * (1.0 - b.p);
}

double LearnedPbd::mean() const {
  if (const auto* s = std::get_if<SparseHypothesis>(&variant)) {
    return static_cast<double>(s->shift) + s->free.mean();
  }
  const auto& b = std::get<BinomialHypothesis>(variant);
  return static_cast<double>(b.n) * b.p;
}

LearnedPbd learn_pbd(SampleStream& stream, std::int64_t n, double eps,
                     const LearnerConstants& constants, double sample_scale) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("learn_pbd: eps must lie in (0, 1)");
  if (n < 1) throw std::invalid_argument("learn_pbd: n must be at least 1");

  const std::uint64_t count = scaled_count(
      static_cast<double>(learner_sample_count(eps, constants)), sample_scale);
  const SampleHistogram hist = stream.draw_histogram(count);
  const Moments moments = histogram_moments(hist);

  LearnedPbd out;
  out.samples_used = count;
  out.batch_moments = moments;

  if (moments.variance >= constants.A_t / (eps * eps) && moments.mean > 0.0) {
    out.variant = fit_binomial(moments, n);
    return out;
  }

  // Samples outside [0, n] cannot come from a PBD on n variables; drop them.
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (std::size_t j = 0; j < hist.counts().size(); ++j) {
    const std::int64_t x = hist.lo() + static_cast<std::int64_t>(j);
    if (hist.counts()[j] == 0 || x < 0 || x > n) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (lo > hi) {
    SparseHypothesis s;
    s.shift = std::clamp<std::int64_t>(std::llround(moments.mean), 0, n);
    s.pmf = ExplicitDistribution::point_mass(s.shift);
    out.variant = std::move(s);
    return out;
  }
  const std::int64_t observed_lo = lo;
  const std::int64_t observed_hi = hi;

  // Keep the heaviest window of the allowed length.
  const std::int64_t cap = sparse_support_cap(eps, constants);
  if (hi - lo + 1 > cap) {
    std::uint64_t best = 0, window = 0;
    std::int64_t best_lo = lo;
    for (std::int64_t x = lo; x <= hi; ++x) {
      window += hist.count(x);
      if (x - lo >= cap) window -= hist.count(x - cap);
      if (x - lo + 1 >= cap && window > best) {
        best = window;
        best_lo = x - cap + 1;
      }
    }
    lo = best_lo;
    hi = best_lo + cap - 1;
    while (hist.count(lo) == 0) ++lo;
    while (hist.count(hi) == 0) --hi;
  }

  // m free variables with average mean q carry at most m q (1 - q) variance,
  // so the observed range alone is too few once the variance passes a
  // handful. Grow the window around the mean until it can hold the batch
  // variance with some headroom, within the EM budget.
  const std::int64_t range = hi - lo;
  const std::int64_t limit = std::min({n, cap - 1, std::max<std::int64_t>(range, constants.em_max_variables)});
  const auto place = [&](std::int64_t width) {
    return std::clamp<std::int64_t>(std::llround(moments.mean - 0.5 * static_cast<double>(width)),
                                    std::max<std::int64_t>(0, hi - width), std::min(lo, n - width));
  };
  const auto capacity = [&](std::int64_t width) {
    if (width == 0) return 0.0;
    const double w = static_cast<double>(width);
    const double q = std::clamp((moments.mean - static_cast<double>(place(width))) / w, 0.0, 1.0);
    return w * q * (1.0 - q);
  };
  const double needed = 1.1 * moments.variance;
  std::int64_t m = range;
  bool fits = capacity(m) >= needed;
  while (!fits && m < n) {
    m = std::min(n, std::max(m + 1, static_cast<std::int64_t>(std::ceil(1.25 * static_cast<double>(m)))));
    fits = capacity(m) >= needed;
  }
  const bool truncated = m > limit;
  m = std::max(range, std::min(m, limit));
  const std::int64_t shift = place(m);

  std::vector<double> counts(static_cast<std::size_t>(m + 1), 0.0);
  for (std::int64_t x = lo; x <= hi; ++x) {
    counts[static_cast<std::size_t>(x - shift)] = static_cast<double>(hist.count(x));
  }
  EmFit fit = fit_pbd_em(counts, constants);
  SparseHypothesis s;
  s.shift = shift;
  s.free = std::move(fit.pbd);
  s.em_iterations = fit.iterations;
  const ExplicitDistribution base = pbd_pmf(s.free);
  s.pmf = ExplicitDistribution(shift + base.lo(),
                               std::vector<double>(base.probs().begin(), base.probs().end()));

  // When the budget truncated the window below what the variance needs, a
  // moment-matched binomial competes with the EM fit; the smaller empirical TV
  // on the batch wins, ties going to the EM fit.
  if (truncated && n > 1 && moments.mean > 0.0 && moments.variance < moments.mean) {
    const BinomialHypothesis b = fit_binomial(moments, n);
    const ExplicitDistribution empirical = empirical_distribution(hist, Interval{observed_lo, observed_hi});
    if (tv_distance(binomial_pmf(b.n, b.p), empirical) < tv_distance(s.pmf, empirical)) {
      out.variant = b;
      return out;
    }
  }
  out.variant = std::move(s);
  return out;
}

}  // namespace pbdtest
