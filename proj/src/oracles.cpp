#include "pbdtest/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace pbdtest::oracles {

OracleReport make_report(std::string name, double oracle_value, double fast_value) {
  OracleReport r;
  r.name = std::move(name);
  r.oracle_value = oracle_value;
  r.fast_value = fast_value;
  r.abs_error = std::abs(oracle_value - fast_value);
  r.rel_error = oracle_value != 0.0 ? r.abs_error / std::abs(oracle_value) : r.abs_error;
  return r;
}

nlohmann::json to_json(const OracleReport& r) {
  return {{"name", r.name},         {"oracle_value", r.oracle_value},
          {"fast_value", r.fast_value}, {"abs_error", r.abs_error},
          {"rel_error", r.rel_error}, {"details", r.details}};
}

ExplicitDistribution brute_force_pbd_pmf(std::span<const double> ps) {
  const std::size_t n = ps.size();
  if (n > kMaxBruteForceN) throw std::invalid_argument("brute_force_pbd_pmf: n > 20");
  for (double p : ps) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("brute_force_pbd_pmf: p outside [0,1]");
  }
  std::vector<double> probs(n + 1, 0.0);
  const std::uint64_t outcomes = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
    double w = 1.0;
    int ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1U) {
        w *= ps[i];
        ++ones;
      } else {
        w *= 1.0 - ps[i];
      }
    }
    probs[static_cast<std::size_t>(ones)] += w;
  }
  return ExplicitDistribution(0, std::move(probs));
}

double direct_tv(const ExplicitDistribution& p, const ExplicitDistribution& q) {
  const std::int64_t lo = std::min(p.lo(), q.lo());
  const std::int64_t hi = std::max(p.hi(), q.hi());
  double s = std::abs(p.overflow() - q.overflow());
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double a = p.support().contains(x) ? p.probs()[static_cast<std::size_t>(x - p.lo())] : 0.0;
    const double b = q.support().contains(x) ? q.probs()[static_cast<std::size_t>(x - q.lo())] : 0.0;
    s += std::abs(a - b);
  }
  return 0.5 * s;
}

double exact_tv_to_pbd_class(const ExplicitDistribution& p, std::size_t n, double grid_step) {
  if (n > kMaxPbdClassN) throw std::invalid_argument("exact_tv_to_pbd_class: n > 3");
  if (!(grid_step >= kMinGridStep) || grid_step > 1.0) {
    throw std::invalid_argument("exact_tv_to_pbd_class: grid_step must lie in [0.01, 1]");
  }
  std::vector<double> grid;
  // Integer multiples avoid drift; the count tolerance keeps 1.0 on exact grids.
  const auto steps = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) grid.push_back(std::min(1.0, i * grid_step));
  if (grid.back() < 1.0) grid.push_back(1.0);

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> ps(n);
  // Nondecreasing index tuples cover every PBD once up to permutation.
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) ps[i] = grid[idx[i]];
    best = std::min(best, direct_tv(p, brute_force_pbd_pmf(ps)));
    std::size_t pos = n;
    while (pos > 0 && idx[pos - 1] + 1 == grid.size()) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < n; ++i) idx[i] = idx[pos - 1];
  }
  return best;
}

namespace {

// min over nondecreasing u (values restricted to `cand`) of
// sum_i |y_i - u_i| + lambda u_i. cost[v] after point i is the best value with
// u_i = cand[v]; a running prefix minimum enforces monotonicity.
double isotonic_cost(std::span<const double> y, std::span<const double> cand, double lambda) {
  if (y.empty()) return 0.0;
  std::vector<double> cost(cand.size(), 0.0);
  for (double yi : y) {
    double run = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < cand.size(); ++v) {
      run = std::min(run, cost[v]);
      cost[v] = run + std::abs(yi - cand[v]) + lambda * cand[v];
    }
  }
  return *std::min_element(cost.begin(), cost.end());
}

}  // namespace

double exact_tv_to_unimodal(const ExplicitDistribution& p) {
  const std::size_t m = p.size();
  if (m > kMaxUnimodalSupport) throw std::invalid_argument("exact_tv_to_unimodal: support > 60");
  std::vector<double> y(p.probs().begin(), p.probs().end());
  // Optimal values sit at breakpoints of the piecewise-linear losses.
  std::vector<double> cand(y);
  cand.push_back(0.0);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  const double overflow = p.overflow();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t split = 0; split < m; ++split) {
    // Nondecreasing on [0, split], nonincreasing on [split + 1, m).
    std::vector<double> up(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(split) + 1);
    std::vector<double> down(y.rbegin(), y.rbegin() + static_cast<std::ptrdiff_t>(m - split - 1));
    auto dual = [&](double lambda) {
      return isotonic_cost(up, cand, lambda) + isotonic_cost(down, cand, lambda) - lambda;
    };
    double a = -1.0, b = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double m1 = a + (b - a) / 3.0;
      const double m2 = b - (b - a) / 3.0;
      if (dual(m1) < dual(m2)) {
        a = m1;
      } else {
        b = m2;
      }
    }
    const double value = std::max({dual(a), dual(b), dual(0.5 * (a + b))});
    best = std::min(best, value);
  }
  // Overflow mass has no place in an integer-supported unimodal law.
  return 0.5 * (best + overflow);
}

double tn_expected_mean(const ExplicitDistribution& p, const ExplicitDistribution& q) {
  const std::int64_t lo = std::min(p.lo(), q.lo());
  const std::int64_t hi = std::max(p.hi(), q.hi());
  double s = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) s += (p(x) - q(x)) * (p(x) - q(x));
  return s;
}

double tn_expected_variance(const ExplicitDistribution& p, const ExplicitDistribution& q,
                            double k) {
  const std::int64_t lo = std::min(p.lo(), q.lo());
  const std::int64_t hi = std::max(p.hi(), q.hi());
  double s = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double lam = k * p(x);
    const double lam_q = k * q(x);
    s += lam * lam + 2.0 * lam * (lam - lam_q) * (lam - lam_q);
  }
  return 2.0 * s / (k * k * k * k);
}

MomentCheck monte_carlo_moment_check(const ExplicitDistribution& p, const ExplicitDistribution& q,
                                     double k, int trials, std::uint64_t seed) {
  if (trials < kMinMomentTrials) {
    throw std::invalid_argument("monte_carlo_moment_check: need at least 10^4 trials");
  }
  if (!(k > 0.0)) throw std::invalid_argument("monte_carlo_moment_check: k must be positive");
  const std::int64_t lo = std::min(p.lo(), q.lo());
  const std::int64_t hi = std::max(p.hi(), q.hi());
  std::mt19937_64 engine(seed);
  std::vector<std::poisson_distribution<long long>> counts;
  std::vector<double> rates_q;
  for (std::int64_t x = lo; x <= hi; ++x) {
    counts.emplace_back(std::max(k * p(x), 1e-300));
    rates_q.push_back(k * q(x));
  }
  // The fourth central moment gives the standard error of the variance.
  std::vector<double> values(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
      const double kj = p(lo + static_cast<std::int64_t>(j)) > 0.0
                            ? static_cast<double>(counts[j](engine))
                            : 0.0;
      s += (kj - rates_q[j]) * (kj - rates_q[j]) - kj;
    }
    values[static_cast<std::size_t>(t)] = s / (k * k);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= trials;
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double var = m2 / (trials - 1);
  m4 /= trials;
  MomentCheck out;
  out.trials = trials;
  out.mean = mean;
  out.variance = var;
  out.expected_mean = tn_expected_mean(p, q);
  out.expected_variance = tn_expected_variance(p, q, k);
  out.mean_se = std::sqrt(var / trials);
  out.variance_se = std::sqrt(std::max(0.0, m4 - var * var) / trials);
  return out;
}

OracleReport to_report(const MomentCheck& m) {
  OracleReport r = make_report("tn_moments", m.expected_mean, m.mean);
  r.details = {{"mean", m.mean},
               {"expected_mean", m.expected_mean},
               {"mean_se", m.mean_se},
               {"variance", m.variance},
               {"expected_variance", m.expected_variance},
               {"variance_se", m.variance_se},
               {"trials", m.trials}};
  return r;
}

namespace {

// Poisson(rate) masses on [first, last] by recursion outward from the mode.
std::vector<double> poisson_window(double rate, std::int64_t first, std::int64_t last) {
  const auto mode = static_cast<std::int64_t>(std::floor(rate));
  const double log_mode = -rate + static_cast<double>(mode) * std::log(rate) -
                          std::lgamma(static_cast<double>(mode) + 1.0);
  std::vector<double> out(static_cast<std::size_t>(last - first + 1), 0.0);
  double v = std::exp(log_mode);
  for (std::int64_t x = mode; x <= last; ++x) {
    if (x >= first) out[static_cast<std::size_t>(x - first)] = v;
    v *= rate / static_cast<double>(x + 1);
  }
  v = std::exp(log_mode);
  for (std::int64_t x = mode; x >= first && x >= 0; --x) {
    if (x <= last) out[static_cast<std::size_t>(x - first)] = v;
    v *= static_cast<double>(x) / rate;
  }
  return out;
}

std::int64_t shortest_cover_length(const std::vector<double>& probs, double mass) {
  std::vector<double> prefix(probs.size() + 1, 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) prefix[i + 1] = prefix[i] + probs[i];
  std::int64_t best = static_cast<std::int64_t>(probs.size());
  for (std::size_t a = 0; a < probs.size(); ++a) {
    const double target = prefix[a] + mass - 1e-12;
    const auto it = std::lower_bound(prefix.begin() + static_cast<std::ptrdiff_t>(a) + 1,
                                      prefix.end(), target);
    if (it == prefix.end()) break;
    best = std::min<std::int64_t>(best, it - prefix.begin() - static_cast<std::ptrdiff_t>(a));
  }
  return best;
}

}  // namespace

nlohmann::json calibration_report(std::span<const double> eps_grid,
                                  std::span<const double> sigma_grid, double margin) {
  nlohmann::json cells = nlohmann::json::array();
  double min_c = std::numeric_limits<double>::infinity();
  for (double sigma : sigma_grid) {
    const double rate = sigma * sigma;
    const double reach = 14.0 * sigma + 30.0;
    const auto first = std::max<std::int64_t>(0, static_cast<std::int64_t>(rate - reach));
    const auto last = static_cast<std::int64_t>(rate + reach);
    const std::vector<double> pmf = poisson_window(rate, first, last);
    for (double eps : eps_grid) {
      const double logt = std::max(1.0, std::log(1.0 / eps));
      const std::int64_t len = shortest_cover_length(pmf, 1.0 - eps / 10.0);
      const double c = 0.04 * sigma * std::sqrt(logt) / static_cast<double>(len);
      min_c = std::min(min_c, c);
      cells.push_back({{"eps", eps}, {"sigma", sigma}, {"interval_length", len}, {"c", c}});
    }
  }
  // Null sd of T_n is about (pi sigma^2)^(-1/4) / k, so threshold / sd equals
  // 0.25 c C1 pi^(1/4) at the prescribed rate.
  const double pi_quarter = std::pow(3.14159265358979323846, 0.25);
  const double c1 = margin / (0.25 * min_c * pi_quarter);
  return {{"cells", cells},
          {"min_c_l2", min_c},
          {"margin", margin},
          {"recommended_C1", c1}};
}

}  // namespace pbdtest::oracles
