// Command-line front end: test, learn, stat, sample, lowerbound, oracle, bench.
//
// stdout always carries exactly one JSON document. Artifacts written with
// --out embed the resolved configuration and a schema_version field, and
// contain nothing that varies between runs with the same seed.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbdtest/bounds.hpp"
#include "pbdtest/config.hpp"
#include "pbdtest/dist_spec.hpp"
#include "pbdtest/distribution.hpp"
#include "pbdtest/learner.hpp"
#include "pbdtest/lowerbound.hpp"
#include "pbdtest/oracles.hpp"
#include "pbdtest/parallel.hpp"
#include "pbdtest/sampling.hpp"
#include "pbdtest/tester.hpp"

namespace {

using nlohmann::json;
using namespace pbdtest;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoPbd = 2;

struct SourceOptions {
  std::string spec_path;
  std::string samples_path;
};

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::optional<int> threads;
  std::string out_path;
};

void add_source(CLI::App* cmd, SourceOptions& src) {
  auto* spec = cmd->add_option("--spec", src.spec_path, "distribution spec JSON")->check(CLI::ExistingFile);
  auto* samples =
      cmd->add_option("--samples", src.samples_path, "sample file, one integer per line")
          ->check(CLI::ExistingFile);
  spec->excludes(samples);
  samples->excludes(spec);
}

void add_common(CLI::App* cmd, CommonOptions& common, bool stochastic) {
  auto* seed = cmd->add_option("--seed", common.seed, "RNG seed");
  if (stochastic) seed->required();
  cmd->add_option("--config", common.config_path, "JSON file overriding tester constants")
      ->check(CLI::ExistingFile);
  cmd->add_option("--threads", common.threads, "worker threads (default 1)")->check(CLI::PositiveNumber);
  cmd->add_option("--out", common.out_path, "artifact path");
}

TestConfig resolve_config(const CommonOptions& common) {
  TestConfig config = default_config();
  if (!common.config_path.empty()) config = load_config_file(common.config_path, config);
  if (common.seed) config.seed = *common.seed;
  if (common.threads) config.threads = *common.threads;
  return config;
}

struct Source {
  json description;
  SampleStream stream;
  std::optional<ExplicitDistribution> dist;
};

Source open_source(const SourceOptions& src, std::uint64_t seed) {
  if (!src.spec_path.empty()) {
    const DistSpec spec = load_dist_spec(src.spec_path);
    ExplicitDistribution dist = materialize(spec);
    SampleStream stream = SampleStream::from_distribution(dist, seed);
    return {to_json(spec), std::move(stream), std::move(dist)};
  }
  if (!src.samples_path.empty()) {
    std::vector<std::int64_t> samples = read_sample_file(src.samples_path);
    json d = {{"kind", "sample_file"}, {"count", samples.size()}};
    return {d, SampleStream::from_samples(std::move(samples), seed), std::nullopt};
  }
  throw std::invalid_argument("one of --spec or --samples is required");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json envelope(const char* command, const TestConfig& config) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", to_json(config)}};
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size() || !(v > 0.0)) throw std::invalid_argument("bad k-grid entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

//---------------------------------------------------------------------------//
// Subcommands
//---------------------------------------------------------------------------//

struct TestOptions {
  SourceOptions src;
  CommonOptions common;
  std::int64_t n = 0;
  std::optional<double> eps, delta;
  bool assert_yes = false;
};

int run_test(const TestOptions& o) {
  TestConfig config = resolve_config(o.common);
  if (o.eps) config.eps = *o.eps;
  if (o.delta) config.delta = *o.delta;
  config.validate();
  Source source = open_source(o.src, config.seed);
  const AmplifiedVerdict verdict = test_pbd(source.stream, o.n, config);

  json artifact = envelope("test", config);
  artifact["n"] = o.n;
  artifact["source"] = source.description;
  artifact["result"] = to_json(verdict, true);
  if (!o.common.out_path.empty()) write_json(o.common.out_path, artifact);

  json summary = envelope("test", config);
  summary["n"] = o.n;
  summary["source"] = source.description;
  summary["result"] = to_json(verdict, false);
  std::cout << summary.dump() << "\n";
  return o.assert_yes && verdict.verdict == Verdict::NoPbd ? kExitNoPbd : kExitOk;
}

struct LearnOptions {
  SourceOptions src;
  CommonOptions common;
  std::int64_t n = 0;
  double eps = 0.1;
};

int run_learn(const LearnOptions& o) {
  TestConfig config = resolve_config(o.common);
  Source source = open_source(o.src, config.seed);
  const LearnedPbd learned = learn_pbd(source.stream, o.n, o.eps, config.learner);
  json result = {{"hypothesis", to_json(to_spec(learned))},
                 {"variant", learned.is_sparse() ? "sparse" : "binomial"},
                 {"samples_used", learned.samples_used},
                 {"hypothesis_mean", learned.mean()},
                 {"hypothesis_variance", learned.variance()}};
  if (source.dist) result["tv_to_source"] = tv_distance(learned.pmf(), *source.dist);
  json artifact = envelope("learn", config);
  artifact["n"] = o.n;
  artifact["eps"] = o.eps;
  artifact["source"] = source.description;
  artifact["result"] = result;
  if (!o.common.out_path.empty()) write_json(o.common.out_path, artifact);
  std::cout << artifact.dump() << "\n";
  return kExitOk;
}

struct StatOptions {
  SourceOptions src;
  CommonOptions common;
  std::string against;
  double k = 100.0;
  int trials = 1;
};

int run_stat(const StatOptions& o) {
  TestConfig config = resolve_config(o.common);
  Source source = open_source(o.src, config.seed);
  const DistSpec q_spec = load_dist_spec(o.against);
  const ExplicitDistribution q = materialize(q_spec, config.tail_cut);
  if (o.trials < 1) throw std::invalid_argument("--trials must be at least 1");
  std::vector<double> values;
  for (int t = 0; t < o.trials; ++t) {
    const SampleHistogram hist = source.stream.poissonized_histogram(o.k);
    values.push_back(l2_statistic(hist, q));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;
  json result = {{"k", o.k}, {"trials", o.trials}, {"t_mean", mean}, {"t_variance", var},
                 {"samples_used", source.stream.consumed()}};
  if (o.trials <= 10) result["t_values"] = values;
  if (source.dist) {
    result["ell2_sq"] = ell2_sq_distance(*source.dist, q);
    result["tv"] = tv_distance(*source.dist, q);
    result["expected_variance"] = oracles::tn_expected_variance(*source.dist, q, o.k);
  }
  json artifact = envelope("stat", config);
  artifact["source"] = source.description;
  artifact["against"] = to_json(q_spec);
  artifact["result"] = result;
  if (!o.common.out_path.empty()) write_json(o.common.out_path, artifact);
  std::cout << artifact.dump() << "\n";
  return kExitOk;
}

struct SampleOptions {
  std::string spec_path;
  CommonOptions common;
  std::uint64_t count = 0;
};

int run_sample(const SampleOptions& o) {
  TestConfig config = resolve_config(o.common);
  const DistSpec spec = load_dist_spec(o.spec_path);
  SampleStream stream = SampleStream::from_distribution(materialize(spec), config.seed);
  const std::vector<std::int64_t> samples = stream.draw(o.count);
  if (!o.common.out_path.empty()) write_sample_file(o.common.out_path, samples);
  double mean = 0.0;
  for (std::int64_t x : samples) mean += static_cast<double>(x);
  if (!samples.empty()) mean /= static_cast<double>(samples.size());
  json summary = envelope("sample", config);
  summary["source"] = to_json(spec);
  summary["result"] = {{"count", o.count}, {"sample_mean", mean}};
  if (o.common.out_path.empty() && o.count <= 1000) summary["result"]["samples"] = samples;
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

struct LowerBoundOptions {
  CommonOptions common;
  std::int64_t n = 4096;
  double c = 1.0;
  double eps = 0.2;
  std::optional<double> delta;
  std::string k_grid = "16,64,256,1024,4096";
  int trials = 50;
  bool no_full = false;
};

int run_lowerbound(const LowerBoundOptions& o) {
  TestConfig config = resolve_config(o.common);
  config.eps = o.eps;
  if (o.delta) config.delta = *o.delta;
  config.validate();
  DetectionSettings s;
  s.n = o.n;
  s.c = o.c;
  s.eps = o.eps;
  s.k_grid = parse_grid(o.k_grid);
  s.include_full_budget = !o.no_full;
  s.trials = o.trials;
  s.config = config;
  const DetectionReport report = detection_experiment(s);

  json meta = envelope("lowerbound", config);
  meta["n"] = o.n;
  meta["c_requested"] = o.c;
  meta["trials"] = o.trials;
  meta["half_collision_mass"] = half_collision_mass(o.n);
  if (!o.common.out_path.empty()) {
    write_text(o.common.out_path, "# " + meta.dump() + "\n" + detection_csv(report));
  }
  meta["result"] = to_json(report);
  std::cout << meta.dump() << "\n";
  return kExitOk;
}

struct OracleOptions {
  CommonOptions common;
  std::string suite = "all";
  int trials = 20000;
};

std::vector<oracles::OracleReport> oracle_pmf_suite(std::uint64_t seed) {
  std::vector<oracles::OracleReport> out;
  SplitMix64 rng(derive_seed(seed, 1));
  for (int c = 0; c < 100; ++c) {
    const auto n = static_cast<std::size_t>(rng.below(13));
    std::vector<double> ps(n);
    for (double& p : ps) p = rng.uniform();
    const ExplicitDistribution fast = pbd_pmf(Pbd(ps));
    const ExplicitDistribution slow = oracles::brute_force_pbd_pmf(ps);
    double err = 0.0;
    for (std::int64_t x = 0; x <= static_cast<std::int64_t>(n); ++x) {
      err = std::max(err, std::abs(fast(x) - slow(x)));
    }
    auto r = oracles::make_report("pmf_case_" + std::to_string(c), 0.0, err);
    r.details = {{"n", n}, {"max_abs_error", err}};
    out.push_back(r);
  }
  return out;
}

std::vector<oracles::OracleReport> oracle_unimodal_suite(std::uint64_t seed) {
  std::vector<oracles::OracleReport> out;
  SplitMix64 rng(derive_seed(seed, 2));
  for (int c = 0; c < 30; ++c) {
    const auto m = static_cast<std::size_t>(3 + rng.below(20));
    std::vector<double> probs(m);
    double total = 0.0;
    for (double& p : probs) total += (p = rng.uniform());
    for (double& p : probs) p /= total;
    const ExplicitDistribution d(0, probs);
    const double exact = oracles::exact_tv_to_unimodal(d);
    const double lb = 0.5 * unimodal_distance_lb(d, d.support());
    auto r = oracles::make_report("unimodal_case_" + std::to_string(c), exact, lb);
    r.details = {{"support", m}, {"certified_below_exact", lb <= exact + 1e-9}};
    out.push_back(r);
  }
  return out;
}

std::vector<oracles::OracleReport> oracle_pbd_class_suite() {
  std::vector<oracles::OracleReport> out;
  const ExplicitDistribution b2 = binomial_pmf(2, 0.5);
  auto r1 = oracles::make_report("binomial_2_half", 0.0, oracles::exact_tv_to_pbd_class(b2, 2, 0.01));
  out.push_back(r1);
  const ExplicitDistribution spikes(0, {0.5, 0.0, 0.5});
  auto r2 = oracles::make_report("two_spikes", std::sqrt(2.0) - 1.0,
                                 oracles::exact_tv_to_pbd_class(spikes, 2, 0.01));
  out.push_back(r2);
  return out;
}

std::vector<oracles::OracleReport> oracle_moment_suite(std::uint64_t seed, int trials) {
  std::vector<oracles::OracleReport> out;
  SplitMix64 rng(derive_seed(seed, 3));
  for (int c = 0; c < 5; ++c) {
    const std::size_t m = 20;
    std::vector<double> p(m), q(m);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sp += (p[i] = rng.uniform() + 0.1);
      sq += (q[i] = rng.uniform() + 0.1);
    }
    for (std::size_t i = 0; i < m; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const auto check = oracles::monte_carlo_moment_check(ExplicitDistribution(0, p),
                                                         ExplicitDistribution(0, q), 50.0, trials,
                                                         derive_seed(seed, 100 + c));
    auto r = oracles::to_report(check);
    r.name = "tn_moments_case_" + std::to_string(c);
    out.push_back(r);
  }
  return out;
}

int run_oracle(const OracleOptions& o) {
  TestConfig config = resolve_config(o.common);
  std::vector<oracles::OracleReport> reports;
  json calibration;
  const bool all = o.suite == "all";
  bool known = all;
  if (all || o.suite == "pmf") {
    auto r = oracle_pmf_suite(config.seed);
    reports.insert(reports.end(), r.begin(), r.end());
    known = true;
  }
  if (all || o.suite == "unimodal") {
    auto r = oracle_unimodal_suite(config.seed);
    reports.insert(reports.end(), r.begin(), r.end());
    known = true;
  }
  if (all || o.suite == "pbd-class") {
    auto r = oracle_pbd_class_suite();
    reports.insert(reports.end(), r.begin(), r.end());
    known = true;
  }
  if (all || o.suite == "moments") {
    auto r = oracle_moment_suite(config.seed, o.trials);
    reports.insert(reports.end(), r.begin(), r.end());
    known = true;
  }
  if (all || o.suite == "calibration") {
    const std::vector<double> eps_grid = {0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    const std::vector<double> sigma_grid = {8, 16, 32, 64, 128, 256, 512};
    calibration = oracles::calibration_report(eps_grid, sigma_grid);
    known = true;
  }
  if (!known) throw std::invalid_argument("unknown oracle suite '" + o.suite + "'");

  if (!o.common.out_path.empty()) {
    std::string lines;
    for (const auto& r : reports) lines += oracles::to_json(r).dump() + "\n";
    if (!calibration.is_null()) lines += json{{"name", "calibration"}, {"details", calibration}}.dump() + "\n";
    write_text(o.common.out_path, lines);
  }
  double max_abs = 0.0;
  for (const auto& r : reports) max_abs = std::max(max_abs, r.abs_error);
  json summary = envelope("oracle", config);
  summary["suite"] = o.suite;
  summary["result"] = {{"reports", reports.size()}, {"max_abs_error", max_abs}};
  if (!calibration.is_null()) {
    summary["result"]["min_c_l2"] = calibration["min_c_l2"];
    summary["result"]["recommended_C1"] = calibration["recommended_C1"];
  }
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

struct BenchOptions {
  CommonOptions common;
};

int run_bench(const BenchOptions& o) {
  TestConfig config = resolve_config(o.common);
  using clock = std::chrono::steady_clock;
  json ops = json::array();
  auto time = [&](const char* name, auto&& fn) {
    const auto start = clock::now();
    fn();
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    std::cerr << name << ": " << ms << " ms\n";
    ops.push_back(name);
  };
  time("binomial_pmf_1e6", [] { (void)binomial_pmf(1'000'000, 0.3); });
  time("pbd_pmf_2000", [] {
    std::vector<double> ps(2000);
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = static_cast<double>(i % 97) / 97.0;
    (void)pbd_pmf(Pbd(ps));
  });
  time("alias_draws_1e7", [&] {
    SampleStream s = SampleStream::from_distribution(binomial_pmf(10'000, 0.5), config.seed);
    (void)s.draw_histogram(10'000'000);
  });
  time("test_pbd_binomial_1e4", [&] {
    TestConfig c = config;
    c.eps = 0.1;
    c.delta = 0.1;
    SampleStream s = SampleStream::from_distribution(binomial_pmf(10'000, 0.5), config.seed);
    (void)test_pbd(s, 10'000, c);
  });
  json summary = envelope("bench", config);
  summary["result"] = {{"operations", ops}};
  if (!o.common.out_path.empty()) write_json(o.common.out_path, summary);
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson binomial distribution tester"};
  app.require_subcommand(1);

  TestOptions test;
  auto* test_cmd = app.add_subcommand("test", "test whether a source is a PBD");
  add_source(test_cmd, test.src);
  add_common(test_cmd, test.common, true);
  test_cmd->add_option("--n", test.n, "number of Bernoulli variables")->required()->check(CLI::PositiveNumber);
  test_cmd->add_option("--eps", test.eps, "distance parameter");
  test_cmd->add_option("--delta", test.delta, "failure probability");
  test_cmd->add_flag("--assert-yes", test.assert_yes, "exit 2 when the verdict is NoPbd");

  LearnOptions learn;
  auto* learn_cmd = app.add_subcommand("learn", "learn a PBD hypothesis");
  add_source(learn_cmd, learn.src);
  add_common(learn_cmd, learn.common, true);
  learn_cmd->add_option("--n", learn.n, "number of Bernoulli variables")->required()->check(CLI::PositiveNumber);
  learn_cmd->add_option("--eps", learn.eps, "accuracy in total variation")->check(CLI::Range(1e-6, 0.999999));

  StatOptions stat;
  auto* stat_cmd = app.add_subcommand("stat", "Poissonized l2 statistic against a reference");
  add_source(stat_cmd, stat.src);
  add_common(stat_cmd, stat.common, true);
  stat_cmd->add_option("--against", stat.against, "reference spec JSON")->required()->check(CLI::ExistingFile);
  stat_cmd->add_option("--k", stat.k, "Poisson sample rate")->check(CLI::PositiveNumber);
  stat_cmd->add_option("--trials", stat.trials, "independent Poissonized draws")->check(CLI::PositiveNumber);

  SampleOptions sample;
  auto* sample_cmd = app.add_subcommand("sample", "draw samples from a spec");
  sample_cmd->add_option("--spec", sample.spec_path, "distribution spec JSON")->required()->check(CLI::ExistingFile);
  add_common(sample_cmd, sample.common, true);
  sample_cmd->add_option("--count", sample.count, "number of samples")->required();

  LowerBoundOptions lb;
  auto* lb_cmd = app.add_subcommand("lowerbound", "indistinguishability experiment");
  add_common(lb_cmd, lb.common, true);
  lb_cmd->add_option("--n", lb.n, "number of Bernoulli variables, even")->check(CLI::PositiveNumber);
  lb_cmd->add_option("--c", lb.c, "perturbation scale")->check(CLI::PositiveNumber);
  lb_cmd->add_option("--eps", lb.eps, "perturbation size and tester distance")->check(CLI::Range(1e-6, 0.999999));
  lb_cmd->add_option("--delta", lb.delta, "tester failure probability");
  lb_cmd->add_option("--k-grid", lb.k_grid, "comma-separated sample caps");
  lb_cmd->add_option("--trials", lb.trials, "trials per source and cap")->check(CLI::NonNegativeNumber);
  lb_cmd->add_flag("--no-full", lb.no_full, "skip the full-budget row");

  OracleOptions oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "reference checks and calibration");
  add_common(oracle_cmd, oracle.common, false);
  oracle_cmd->add_option("--suite", oracle.suite, "pmf|unimodal|pbd-class|moments|calibration|all");
  oracle_cmd->add_option("--trials", oracle.trials, "Monte Carlo trials for the moment suite")->check(CLI::Range(oracles::kMinMomentTrials, 100'000'000));

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "timings on stderr");
  add_common(bench_cmd, bench.common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*test_cmd) return run_test(test);
    if (*learn_cmd) return run_learn(learn);
    if (*stat_cmd) return run_stat(stat);
    if (*sample_cmd) return run_sample(sample);
    if (*lb_cmd) return run_lowerbound(lb);
    if (*oracle_cmd) return run_oracle(oracle);
    if (*bench_cmd) return run_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cout << json{{"schema_version", kSchemaVersion}, {"error", e.what()}}.dump() << "\n";
    return kExitError;
  }
  return kExitError;
}
