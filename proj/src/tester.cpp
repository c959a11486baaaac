#include "pbdtest/tester.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pbdtest/parallel.hpp"

namespace pbdtest {

namespace {

std::uint64_t scaled_count(double full, double scale) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(full * scale)));
}

TestVerdict reject(Branch branch, Diagnostics diag, std::string reason, std::uint64_t used) {
  diag.reject_reason = std::move(reason);
  return {Verdict::NoPbd, branch, std::move(diag), used};
}

}  // namespace

const char* to_string(Verdict v) { return v == Verdict::YesPbd ? "YesPbd" : "NoPbd"; }
const char* to_string(Branch b) { return b == Branch::Sparse ? "Sparse" : "Heavy"; }

double truncated_log(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("truncated_log: x must be positive");
  return std::max(1.0, std::log(x));
}

//---------------------------------------------------------------------------//
// Tolerant identity test and coarsening
//---------------------------------------------------------------------------//

std::uint64_t identity_test_sample_count(std::size_t atoms, double eps, double A_tol) {
  return static_cast<std::uint64_t>(std::ceil(A_tol * static_cast<double>(atoms) / (eps * eps)));
}

Closeness simple_tolerant_identity_test(const ExplicitDistribution& q, const SampleHistogram& hist,
                                        double eps, double A_tol, double* empirical_tv) {
  (void)A_tol;
  if (hist.total() == 0) throw std::invalid_argument("tolerant identity test: no samples");
  // Samples outside Q's dense block are compared against Q's overflow atom.
  const ExplicitDistribution p_hat = empirical_distribution(hist, q.support());
  const double tv = tv_distance(p_hat, q);
  if (empirical_tv != nullptr) *empirical_tv = tv;
  return tv < 0.25 * eps ? Closeness::Close : Closeness::Far;
}

Closeness simple_tolerant_identity_test(const ExplicitDistribution& q,
                                        std::span<const std::int64_t> samples, double eps,
                                        double A_tol) {
  const std::size_t atoms = q.size() + (q.overflow() > 0.0 ? 1 : 0);
  const std::uint64_t needed = identity_test_sample_count(atoms, eps, A_tol);
  if (samples.size() < needed) {
    throw std::invalid_argument("tolerant identity test: " + std::to_string(samples.size()) +
                                " samples, need " + std::to_string(needed));
  }
  SampleHistogram hist;
  for (std::int64_t x : samples) hist.add(x);
  return simple_tolerant_identity_test(q, hist, eps, A_tol);
}

ExplicitDistribution Coarsening::apply(const SampleHistogram& hist) const {
  return empirical_distribution(hist, interval);
}

Coarsening coarsen_to_interval(const ExplicitDistribution& hypothesis, double eps) {
  const Interval interval = effective_support_interval(hypothesis, eps / 5.0);
  std::vector<double> probs(static_cast<std::size_t>(interval.length()));
  double inside = 0.0;
  for (std::int64_t x = interval.lo; x <= interval.hi; ++x) {
    probs[static_cast<std::size_t>(x - interval.lo)] = hypothesis(x);
    inside += hypothesis(x);
  }
  const double rest = std::max(0.0, 1.0 - inside);
  return {interval, ExplicitDistribution(interval.lo, std::move(probs), rest)};
}

//---------------------------------------------------------------------------//
// l2 statistic
//---------------------------------------------------------------------------//

double l2_statistic(const SampleHistogram& hist, const ExplicitDistribution& q) {
  const double k = hist.nominal_rate();
  if (!(k > 0.0)) throw std::invalid_argument("l2_statistic: nominal rate must be positive");
  std::int64_t lo = q.lo(), hi = q.hi();
  if (!hist.counts().empty()) {
    lo = std::min(lo, hist.lo());
    hi = std::max(hi, hist.hi());
  }
  long double sum = 0.0L;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const auto count = static_cast<long double>(hist.count(x));
    const long double d = count - static_cast<long double>(k) * q(x);
    sum += d * d - count;
  }
  const auto over = static_cast<long double>(hist.overflow());
  const long double d = over - static_cast<long double>(k) * q.overflow();
  sum += d * d - over;
  return static_cast<double>(sum / (static_cast<long double>(k) * k));
}

double numeric_tv_tp_vs_hypothesis(const TranslatedPoissonParams& tp,
                                   const ExplicitDistribution& hypothesis, double eps,
                                   double tail_cut) {
  if (!(tail_cut < eps / 5.0)) {
    throw std::invalid_argument("numeric_tv_tp_vs_hypothesis: tail_cut must be below eps/5");
  }
  // Omitted TP mass shifts the TV by at most tail_cut.
  return tv_distance(translated_poisson_pmf(tp, tail_cut), hypothesis);
}

//---------------------------------------------------------------------------//
// Thresholds
//---------------------------------------------------------------------------//

double heavy_variance_threshold(double eps, double C) {
  const double l = truncated_log(1.0 / eps);
  return C * std::pow(l, 4) / std::pow(eps, 8);
}

double l2_sample_rate(double sigma_hat, double eps, double C1) {
  return C1 * std::sqrt(sigma_hat * truncated_log(1.0 / eps)) / (eps * eps);
}

double l2_threshold(double sigma_hat, double eps, double c_l2) {
  return 0.25 * c_l2 * eps * eps / (sigma_hat * std::sqrt(truncated_log(1.0 / eps)));
}

int amplification_runs(double delta, double B) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  auto runs = static_cast<int>(std::ceil(B * std::log(1.0 / delta)));
  runs = std::max(runs, 1);
  return runs % 2 == 0 ? runs + 1 : runs;
}

//---------------------------------------------------------------------------//
// Branches
//---------------------------------------------------------------------------//

TestVerdict heavy_case_test(SampleStream& stream, std::int64_t n, const TestConfig& config,
                            const ExplicitDistribution& hypothesis, Diagnostics diag) {
  const double eps = config.eps;
  const double nd = static_cast<double>(n);
  const double eps_prime = nd > 4.0 ? eps / std::pow(nd / 4.0, 0.125) : eps;
  const MomentEstimates m =
      estimate_mean_var(stream, eps_prime, config.learner.A_m, config.sample_scale);
  std::uint64_t used = diag.learner_samples + m.samples_used;
  diag.mu_hat = m.mu_hat;
  diag.sigma2_hat = m.sigma2_hat;
  diag.moment_samples = m.samples_used;
  diag.dtv_threshold = eps / 2.0;

  if (m.sigma2_hat > nd / 2.0) return reject(Branch::Heavy, diag, "variance_above_half_n", used);
  if (!(m.sigma2_hat > 0.0)) return reject(Branch::Heavy, diag, "zero_variance", used);

  const TranslatedPoissonParams tp(m.mu_hat, m.sigma2_hat);
  diag.dtv_hat = numeric_tv_tp_vs_hypothesis(tp, hypothesis, eps, config.tail_cut);
  if (diag.dtv_hat > eps / 2.0) return reject(Branch::Heavy, diag, "tp_far_from_hypothesis", used);

  const double sigma_hat = std::sqrt(m.sigma2_hat);
  const double rate =
      std::max(1.0, std::floor(l2_sample_rate(sigma_hat, eps, config.C1) * config.sample_scale));
  diag.poisson_rate = rate;
  diag.t_threshold = l2_threshold(sigma_hat, eps, config.c_l2);

  // Oversized Poisson draws are discarded and redrawn; this caps the cost.
  constexpr int kMaxAttempts = 64;
  SampleHistogram hist;
  for (int attempt = 0;; ++attempt) {
    hist = stream.poissonized_histogram(rate);
    used += hist.total();
    if (static_cast<double>(hist.total()) <= 4.0 * rate) break;
    ++diag.aborted_draws;
    if (attempt + 1 >= kMaxAttempts) throw std::runtime_error("heavy_case_test: Poisson draws too large");
  }
  diag.poisson_draws = hist.total();
  const ExplicitDistribution q = translated_poisson_pmf(tp, config.tail_cut);
  diag.t_statistic = l2_statistic(hist, q);
  const Verdict v = diag.t_statistic < diag.t_threshold ? Verdict::YesPbd : Verdict::NoPbd;
  if (v == Verdict::NoPbd) diag.reject_reason = "l2_statistic_above_threshold";
  return {v, Branch::Heavy, std::move(diag), used};
}

TestVerdict base_test_pbd(SampleStream& stream, std::int64_t n, const TestConfig& config) {
  config.validate();
  if (n < 1) throw std::invalid_argument("test_pbd: n must be at least 1");
  const double eps = config.eps;
  const LearnedPbd learned = learn_pbd(stream, n, eps * config.learner_eps_factor, config.learner,
                                       config.sample_scale);
  const ExplicitDistribution hypothesis = learned.pmf();

  Diagnostics diag;
  diag.hypothesis = learned.is_sparse() ? "sparse" : "binomial";
  diag.hypothesis_variance = learned.variance();
  diag.variance_threshold = heavy_variance_threshold(eps, config.C);
  diag.learner_samples = learned.samples_used;

  if (diag.hypothesis_variance >= diag.variance_threshold) {
    return heavy_case_test(stream, n, config, hypothesis, std::move(diag));
  }

  const Coarsening coarse = coarsen_to_interval(hypothesis, eps);
  diag.interval = coarse.interval;
  // Every hypothesis is a PBD, so the indicator Chernoff bound caps |I|.
  const double sigma = std::sqrt(diag.hypothesis_variance);
  const double lambda = 2.0 * std::sqrt(std::log(10.0 / eps));
  if (lambda < 2.0 * sigma) {
    const auto ceiling = static_cast<std::int64_t>(std::floor(2.0 * lambda * sigma)) + 1;
    diag.chernoff_ceiling = ceiling;
    if (coarse.interval.length() > ceiling) {
      throw std::logic_error("sparse branch: interval exceeds the Chernoff ceiling");
    }
  }

  const std::uint64_t k = scaled_count(
      static_cast<double>(identity_test_sample_count(
          static_cast<std::size_t>(coarse.interval.length()) + 1, eps, config.A_tol)),
      config.sample_scale);
  const SampleHistogram hist = stream.draw_histogram(k);
  diag.identity_samples = k;
  diag.tv_threshold = 0.25 * eps;
  const Closeness c =
      simple_tolerant_identity_test(coarse.coarsened, hist, eps, config.A_tol, &diag.empirical_tv);
  const std::uint64_t used = learned.samples_used + k;
  if (c == Closeness::Far) return reject(Branch::Sparse, diag, "identity_test_far", used);
  return {Verdict::YesPbd, Branch::Sparse, std::move(diag), used};
}

AmplifiedVerdict test_pbd(SampleStream& stream, std::int64_t n, const TestConfig& config) {
  config.validate();
  AmplifiedVerdict out;
  out.repetitions = amplification_runs(config.delta, config.B);
  out.runs.resize(static_cast<std::size_t>(out.repetitions));
  // File-backed splits share one cursor, so they must run in order.
  const int threads = stream.file_backed() ? 1 : config.threads;
  std::vector<SampleStream> subs;
  subs.reserve(out.runs.size());
  for (std::size_t r = 0; r < out.runs.size(); ++r) subs.push_back(stream.split(r));
  parallel_for(out.runs.size(), threads,
               [&](std::size_t r) { out.runs[r] = base_test_pbd(subs[r], n, config); });
  int heavy = 0;
  for (const TestVerdict& v : out.runs) {
    out.yes_votes += v.verdict == Verdict::YesPbd ? 1 : 0;
    heavy += v.branch == Branch::Heavy ? 1 : 0;
    out.samples_used += v.samples_used;
  }
  out.verdict = 2 * out.yes_votes > out.repetitions ? Verdict::YesPbd : Verdict::NoPbd;
  out.branch = 2 * heavy > out.repetitions ? Branch::Heavy : Branch::Sparse;
  return out;
}

//---------------------------------------------------------------------------//
// JSON
//---------------------------------------------------------------------------//

nlohmann::json to_json(const Diagnostics& d) {
  nlohmann::json j = {{"hypothesis", d.hypothesis},
                      {"hypothesis_variance", d.hypothesis_variance},
                      {"variance_threshold", d.variance_threshold},
                      {"learner_samples", d.learner_samples}};
  if (d.interval) {
    j["interval"] = {d.interval->lo, d.interval->hi};
    j["empirical_tv"] = d.empirical_tv;
    j["tv_threshold"] = d.tv_threshold;
    j["identity_samples"] = d.identity_samples;
    if (d.chernoff_ceiling) j["chernoff_ceiling"] = *d.chernoff_ceiling;
  } else {
    j["mu_hat"] = d.mu_hat;
    j["sigma2_hat"] = d.sigma2_hat;
    j["moment_samples"] = d.moment_samples;
    j["dtv_hat"] = d.dtv_hat;
    j["dtv_threshold"] = d.dtv_threshold;
    j["poisson_rate"] = d.poisson_rate;
    j["poisson_draws"] = d.poisson_draws;
    j["aborted_draws"] = d.aborted_draws;
    j["t_statistic"] = d.t_statistic;
    j["t_threshold"] = d.t_threshold;
  }
  if (!d.reject_reason.empty()) j["reject_reason"] = d.reject_reason;
  return j;
}

nlohmann::json to_json(const TestVerdict& v) {
  return {{"verdict", to_string(v.verdict)},
          {"branch", to_string(v.branch)},
          {"samples_used", v.samples_used},
          {"diagnostics", to_json(v.diagnostics)}};
}

nlohmann::json to_json(const AmplifiedVerdict& v, bool include_runs) {
  nlohmann::json j = {{"verdict", to_string(v.verdict)},
                      {"branch", to_string(v.branch)},
                      {"repetitions", v.repetitions},
                      {"yes_votes", v.yes_votes},
                      {"samples_used", v.samples_used}};
  if (include_runs) {
    j["runs"] = nlohmann::json::array();
    for (const auto& r : v.runs) j["runs"].push_back(to_json(r));
  }
  return j;
}

}  // namespace pbdtest
