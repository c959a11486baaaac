#include "pbdtest/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pbdtest/learner.hpp"
#include "pbdtest/parallel.hpp"
#include "pbdtest/sampling.hpp"
#include "pbdtest/tester.hpp"

namespace pbdtest {

void PerturbedBinomial::validate() const {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("PerturbedBinomial: n must be even and >= 2");
  if (!(c >= 0.0) || !(eps >= 0.0)) throw std::invalid_argument("PerturbedBinomial: c, eps >= 0");
  if (!(c * eps < 1.0)) throw std::invalid_argument("PerturbedBinomial: need c * eps < 1");
  if (z.size() != static_cast<std::size_t>(n / 2)) {
    throw std::invalid_argument("PerturbedBinomial: z must have length n/2");
  }
  for (int s : z) {
    if (s != 1 && s != -1) throw std::invalid_argument("PerturbedBinomial: z entries must be +-1");
  }
}

ExplicitDistribution construct_perturbed_binomial(const PerturbedBinomial& pb) {
  pb.validate();
  const ExplicitDistribution p0 = binomial_pmf(pb.n, 0.5);
  const double a = pb.c * pb.eps;
  const std::int64_t half = pb.n / 2;
  std::vector<double> q(static_cast<std::size_t>(pb.n) + 1);
  q[static_cast<std::size_t>(half)] = p0(half);
  for (std::int64_t i = 0; i < half; ++i) {
    const double s = a * pb.z[static_cast<std::size_t>(i)];
    q[static_cast<std::size_t>(i)] = (1.0 - s) * p0(i);
    q[static_cast<std::size_t>(pb.n - i)] = (1.0 + s) * p0(pb.n - i);
  }
  return ExplicitDistribution(0, std::move(q));
}

std::vector<int> random_signs(std::size_t count, SplitMix64& rng) {
  std::vector<int> z(count);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 64 == 0) bits = rng();
    z[i] = (bits >> (i % 64)) & 1U ? 1 : -1;
  }
  return z;
}

Interval lower_bound_window(std::int64_t n) {
  const double mid = static_cast<double>(n) / 2.0;
  const double r = 4.0 * std::sqrt(static_cast<double>(n));
  return {std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(mid - r))),
          std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor(mid + r)))};
}

double unimodal_distance_lb(const ExplicitDistribution& q, Interval window) {
  if (window.hi < window.lo) return 0.0;
  const auto w = static_cast<std::size_t>(window.length());
  auto at = [&](std::size_t j) { return q(window.lo + static_cast<std::int64_t>(j)); };
  // left[j]: best pairing of drops inside window positions [0, j).
  std::vector<double> left(w + 1, 0.0);
  for (std::size_t j = 2; j <= w; ++j) {
    left[j] = std::max(left[j - 1], left[j - 2] + std::max(0.0, at(j - 2) - at(j - 1)));
  }
  // right[j]: best pairing of rises inside window positions [j, w).
  std::vector<double> right(w + 1, 0.0);
  for (std::size_t j = w; j-- > 0;) {
    right[j] = right[j + 1];
    if (j + 1 < w) right[j] = std::max(right[j], right[j + 2] + std::max(0.0, at(j + 1) - at(j)));
  }
  // Mode at window position m: pairs left of it live in [0, m], pairs right
  // of it in [m, w), and the two sides cannot share m. Modes outside the
  // window reduce to m = -1 or m = w.
  double best = std::min(right[0], left[w]);
  for (std::size_t m = 0; m < w; ++m) {
    const double a = left[m + 1] + right[m + 1];
    const double b = left[m] + right[m];
    best = std::min(best, std::max(a, b));
  }
  return best;
}

double half_collision_mass(std::int64_t n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("half_collision_mass: n must be even");
  const ExplicitDistribution p0 = binomial_pmf(n, 0.5);
  long double s = 0.0L;
  for (std::int64_t i = 0; i < n / 2; ++i) s += static_cast<long double>(p0(i)) * p0(i);
  return static_cast<double>(s);
}

double chi2_indistinguishability_bound(std::int64_t n, double c, double eps, double k) {
  if (!(k > 0.0)) return 0.0;
  const double s = half_collision_mass(n);
  // ln E[LR] <= 2 c^4 eps^4 k^2 S, and Pinsker gives TV <= sqrt(ln E[LR] / 2).
  const double tv = c * c * eps * eps * k * std::sqrt(s);
  return std::min(1.0, tv);
}

double admissible_c(double c, double eps) {
  if (eps <= 0.0) return c;
  return std::min(c, 0.9 / eps);
}

bool lower_bound_regime_met(std::int64_t n, double c, double eps) {
  return c > 200.0 && eps > 100.0 / std::sqrt(static_cast<double>(n));
}

double planned_full_budget(std::int64_t n, const TestConfig& config) {
  const double eps = config.eps;
  const double eps_l = eps * config.learner_eps_factor;
  double per_run = static_cast<double>(learner_sample_count(eps_l, config.learner));
  const double var = static_cast<double>(n) / 4.0;
  if (var >= heavy_variance_threshold(eps, config.C)) {
    const double nd = static_cast<double>(n);
    const double eps_prime = eps / std::pow(nd / 4.0, 0.125);
    per_run += std::ceil(config.learner.A_m / (eps_prime * eps_prime));
    per_run += std::floor(l2_sample_rate(std::sqrt(var), eps, config.C1));
  } else {
    const Coarsening coarse = coarsen_to_interval(binomial_pmf(n, 0.5), eps);
    per_run += static_cast<double>(identity_test_sample_count(
        static_cast<std::size_t>(coarse.interval.length()) + 1, eps, config.A_tol));
  }
  return per_run * amplification_runs(config.delta, config.B);
}

LrResult likelihood_ratio_advantage(std::int64_t n, double c, double eps, double k, int trials,
                                    std::uint64_t seed, int threads) {
  LrResult out;
  if (trials <= 0 || !(k > 0.0)) return out;
  const double x = c * eps;
  const double lm = std::log1p(-x);
  const double lp = std::log1p(x);
  const std::int64_t half = n / 2;
  const DiscreteSampler null_sampler(binomial_pmf(n, 0.5));

  auto log_lr = [&](const SampleHistogram& h) {
    double total = 0.0;
    for (std::int64_t i = 0; i < half; ++i) {
      const auto a = static_cast<double>(h.count(i));
      const auto b = static_cast<double>(h.count(n - i));
      if (a == 0.0 && b == 0.0) continue;
      const double u = a * lm + b * lp;
      const double v = a * lp + b * lm;
      const double hi = std::max(u, v);
      total += hi + std::log1p(std::exp(std::min(u, v) - hi)) - std::log(2.0);
    }
    return total;
  };

  std::vector<int> says_q_null(static_cast<std::size_t>(trials), 0);
  std::vector<int> says_q_alt(static_cast<std::size_t>(trials), 0);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    SplitMix64 rng(derive_seed(seed, 2 * t));
    SampleHistogram h0;
    const std::uint64_t k0 = poisson_variate(rng, k);
    for (std::uint64_t j = 0; j < k0; ++j) h0.add(null_sampler(rng));
    says_q_null[t] = log_lr(h0) > 0.0 ? 1 : 0;

    SplitMix64 rng_q(derive_seed(seed, 2 * t + 1));
    PerturbedBinomial pb{n, c, eps, random_signs(static_cast<std::size_t>(half), rng_q)};
    const DiscreteSampler alt(construct_perturbed_binomial(pb));
    SampleHistogram h1;
    const std::uint64_t k1 = poisson_variate(rng_q, k);
    for (std::uint64_t j = 0; j < k1; ++j) h1.add(alt(rng_q));
    says_q_alt[t] = log_lr(h1) > 0.0 ? 1 : 0;
  });
  double p_alt = 0.0, p_null = 0.0;
  for (int t = 0; t < trials; ++t) {
    p_alt += says_q_alt[static_cast<std::size_t>(t)];
    p_null += says_q_null[static_cast<std::size_t>(t)];
  }
  p_alt /= trials;
  p_null /= trials;
  out.advantage = p_alt - p_null;
  out.se = std::sqrt((p_alt * (1.0 - p_alt) + p_null * (1.0 - p_null)) / trials);
  return out;
}

DetectionReport detection_experiment(const DetectionSettings& s) {
  DetectionReport report;
  report.c_used = admissible_c(s.c, s.eps);
  report.c_scaled = report.c_used < s.c;
  report.regime_met = lower_bound_regime_met(s.n, report.c_used, s.eps);
  if (s.trials <= 0) return report;
  if (s.n < 2 || s.n % 2 != 0) throw std::invalid_argument("detection_experiment: n must be even");

  TestConfig base = s.config;
  base.eps = s.eps;
  base.sample_scale = 1.0;
  base.validate();
  report.full_budget = planned_full_budget(s.n, base);

  std::vector<std::pair<double, bool>> caps;
  for (double k : s.k_grid) caps.emplace_back(k, false);
  if (s.include_full_budget) caps.emplace_back(report.full_budget, true);

  const ExplicitDistribution p0 = binomial_pmf(s.n, 0.5);
  const auto trials = static_cast<std::size_t>(s.trials);
  for (std::size_t row_index = 0; row_index < caps.size(); ++row_index) {
    const auto [cap, full] = caps[row_index];
    if (!(cap > 0.0)) throw std::invalid_argument("detection_experiment: caps must be positive");
    DetectionRow row;
    row.k_cap = cap;
    row.full_budget = full;
    TestConfig cfg = base;
    cfg.threads = 1;
    cfg.sample_scale = std::min(1.0, cap / report.full_budget);
    row.sample_scale = cfg.sample_scale;
    const std::uint64_t row_seed = derive_seed(base.seed, row_index);

    std::vector<int> rejected_null(trials, 0), rejected_alt(trials, 0);
    std::vector<std::uint64_t> used(2 * trials, 0);
    parallel_for(trials, s.config.threads, [&](std::size_t t) {
      SampleStream null_stream = SampleStream::from_distribution(p0, derive_seed(row_seed, 3 * t));
      const AmplifiedVerdict v0 = test_pbd(null_stream, s.n, cfg);
      rejected_null[t] = v0.verdict == Verdict::NoPbd ? 1 : 0;
      used[2 * t] = v0.samples_used;

      SplitMix64 zr(derive_seed(row_seed, 3 * t + 1));
      PerturbedBinomial pb{s.n, report.c_used, s.eps, random_signs(static_cast<std::size_t>(s.n / 2), zr)};
      SampleStream alt_stream = SampleStream::from_distribution(construct_perturbed_binomial(pb),
                                                                derive_seed(row_seed, 3 * t + 2));
      const AmplifiedVerdict v1 = test_pbd(alt_stream, s.n, cfg);
      rejected_alt[t] = v1.verdict == Verdict::NoPbd ? 1 : 0;
      used[2 * t + 1] = v1.samples_used;
    });

    double pd = 0.0, pf = 0.0, total_used = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      pd += rejected_alt[t];
      pf += rejected_null[t];
    }
    for (std::uint64_t u : used) {
      total_used += static_cast<double>(u);
      row.max_samples = std::max(row.max_samples, u);
    }
    const double tn = static_cast<double>(trials);
    pd /= tn;
    pf /= tn;
    row.detect_rate = pd;
    row.false_reject_rate = pf;
    row.advantage = pd - pf;
    row.advantage_se = std::sqrt((pd * (1.0 - pd) + pf * (1.0 - pf)) / tn);
    row.mean_samples = total_used / static_cast<double>(used.size());
    row.chi2_bound = chi2_indistinguishability_bound(s.n, report.c_used, s.eps,
                                                     static_cast<double>(row.max_samples));
    const LrResult lr = likelihood_ratio_advantage(s.n, report.c_used, s.eps, cap, s.trials,
                                                   derive_seed(row_seed, ~0ULL), s.config.threads);
    row.lr_advantage = lr.advantage;
    row.lr_se = lr.se;
    row.lr_chi2_bound = chi2_indistinguishability_bound(s.n, report.c_used, s.eps, cap);
    report.rows.push_back(row);
  }
  return report;
}

std::string detection_csv(const DetectionReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "k_cap,full_budget,sample_scale,mean_samples,max_samples,detect_rate,false_reject_rate,"
         "advantage,advantage_se,chi2_bound,lr_advantage,lr_se,lr_chi2_bound\n";
  for (const DetectionRow& row : r.rows) {
    out << row.k_cap << ',' << (row.full_budget ? 1 : 0) << ',' << row.sample_scale << ','
        << row.mean_samples << ',' << row.max_samples << ',' << row.detect_rate << ','
        << row.false_reject_rate << ',' << row.advantage << ',' << row.advantage_se << ','
        << row.chi2_bound << ',' << row.lr_advantage << ',' << row.lr_se << ','
        << row.lr_chi2_bound << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const DetectionReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const DetectionRow& row : r.rows) {
    rows.push_back({{"k_cap", row.k_cap},
                    {"full_budget", row.full_budget},
                    {"sample_scale", row.sample_scale},
                    {"mean_samples", row.mean_samples},
                    {"max_samples", row.max_samples},
                    {"detect_rate", row.detect_rate},
                    {"false_reject_rate", row.false_reject_rate},
                    {"advantage", row.advantage},
                    {"advantage_se", row.advantage_se},
                    {"chi2_bound", row.chi2_bound},
                    {"lr_advantage", row.lr_advantage},
                    {"lr_se", row.lr_se},
                    {"lr_chi2_bound", row.lr_chi2_bound}});
  }
  return {{"c_used", r.c_used},
          {"c_scaled", r.c_scaled},
          {"regime_met", r.regime_met},
          {"full_budget", r.full_budget},
          {"rows", rows}};
}

}  // namespace pbdtest
