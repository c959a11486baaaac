#include <gtest/gtest.h>

#include <cmath>

#include "pbdtest/distribution.hpp"
#include "pbdtest/oracles.hpp"
#include "pbdtest/rng.hpp"

namespace pbdtest::oracles {
namespace {

TEST(BruteForce, Examples) {
  const std::vector<double> ones = {1.0, 1.0, 1.0};
  const ExplicitDistribution d = brute_force_pbd_pmf(ones);
  EXPECT_DOUBLE_EQ(d(3), 1.0);
  EXPECT_DOUBLE_EQ(d(2), 0.0);
  const std::vector<double> halves = {0.5, 0.5};
  const ExplicitDistribution h = brute_force_pbd_pmf(halves);
  EXPECT_DOUBLE_EQ(h(0), 0.25);
  EXPECT_DOUBLE_EQ(h(1), 0.5);
  EXPECT_DOUBLE_EQ(h(2), 0.25);
}

TEST(BruteForce, Limits) {
  EXPECT_THROW(brute_force_pbd_pmf(std::vector<double>(21, 0.5)), std::invalid_argument);
  EXPECT_THROW(brute_force_pbd_pmf(std::vector<double>{0.5, 1.5}), std::invalid_argument);
}

TEST(DirectTv, CountsOverflow) {
  const ExplicitDistribution a(0, {0.5, 0.5});
  const ExplicitDistribution b(0, {0.5, 0.25}, 0.25);
  EXPECT_DOUBLE_EQ(direct_tv(a, b), 0.25);
  EXPECT_DOUBLE_EQ(direct_tv(a, a), 0.0);
}

TEST(PbdClass, Examples) {
  EXPECT_NEAR(exact_tv_to_pbd_class(binomial_pmf(2, 0.5), 2, 0.01), 0.0, 1e-12);
  // Equal means t with (1-t)^2, t^2 <= 1/2 leave mass 2t(1-t) on the middle;
  // the optimum t = 1 - 1/sqrt(2) gives sqrt(2) - 1, and the grid is slightly worse.
  const double spikes = exact_tv_to_pbd_class(ExplicitDistribution(0, {0.5, 0.0, 0.5}), 2, 0.01);
  EXPECT_GE(spikes, std::sqrt(2.0) - 1.0 - 1e-12);
  EXPECT_LT(spikes, std::sqrt(2.0) - 1.0 + 0.005);
  EXPECT_THROW(exact_tv_to_pbd_class(binomial_pmf(2, 0.5), 4, 0.1), std::invalid_argument);
  EXPECT_THROW(exact_tv_to_pbd_class(binomial_pmf(2, 0.5), 2, 0.001), std::invalid_argument);
}

TEST(Unimodal, Examples) {
  EXPECT_NEAR(exact_tv_to_unimodal(binomial_pmf(30, 0.3)), 0.0, 1e-9);
  EXPECT_NEAR(exact_tv_to_unimodal(ExplicitDistribution(0, {0.5, 0.0, 0.5})), 0.25, 1e-9);
  EXPECT_THROW(exact_tv_to_unimodal(binomial_pmf(80, 0.5)), std::invalid_argument);
}

TEST(Unimodal, NoWorseThanSimpleCandidates) {
  SplitMix64 rng(7);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(8);
    double s = 0.0;
    for (double& x : v) s += (x = rng.uniform());
    for (double& x : v) x /= s;
    const ExplicitDistribution p(0, v);
    const double d = exact_tv_to_unimodal(p);
    EXPECT_LE(d, direct_tv(p, ExplicitDistribution(0, std::vector<double>(8, 0.125))) + 1e-9);
    EXPECT_GE(d, 0.0);
  }
}

TEST(Moments, ClosedFormsAgree) {
  const ExplicitDistribution p = binomial_pmf(20, 0.4);
  const ExplicitDistribution q = binomial_pmf(20, 0.45);
  const MomentCheck m = monte_carlo_moment_check(p, q, 200.0, kMinMomentTrials, 8);
  EXPECT_EQ(m.trials, kMinMomentTrials);
  EXPECT_LE(std::abs(m.mean - m.expected_mean), 5.0 * m.mean_se);
  EXPECT_LE(std::abs(m.variance - m.expected_variance), 5.0 * m.variance_se);
  double l2 = 0.0;
  for (std::int64_t x = 0; x <= 20; ++x) l2 += (p(x) - q(x)) * (p(x) - q(x));
  EXPECT_NEAR(m.expected_mean, l2, 1e-15);
  const OracleReport r = to_report(m);
  EXPECT_EQ(r.name, "tn_moments");
  EXPECT_TRUE(to_json(r).contains("details"));
}

TEST(Moments, Requirements) {
  const ExplicitDistribution p = binomial_pmf(4, 0.5);
  EXPECT_THROW(monte_carlo_moment_check(p, p, 10.0, kMinMomentTrials - 1, 1), std::invalid_argument);
  EXPECT_THROW(monte_carlo_moment_check(p, p, 0.0, kMinMomentTrials, 1), std::invalid_argument);
}

TEST(Calibration, ReportShape) {
  const std::vector<double> eps = {0.1, 0.2};
  const std::vector<double> sigma = {50.0, 100.0};
  const nlohmann::json r = calibration_report(eps, sigma);
  EXPECT_EQ(r["cells"].size(), 4u);
  EXPECT_GT(r["min_c_l2"].get<double>(), 0.0);
  EXPECT_GT(r["recommended_C1"].get<double>(), 0.0);
  for (const auto& cell : r["cells"]) {
    EXPECT_GE(cell["c"].get<double>(), r["min_c_l2"].get<double>());
    EXPECT_GT(cell["interval_length"].get<std::int64_t>(), 0);
  }
}

TEST(Report, Errors) {
  const OracleReport r = make_report("x", 2.0, 2.5);
  EXPECT_DOUBLE_EQ(r.abs_error, 0.5);
  EXPECT_DOUBLE_EQ(r.rel_error, 0.25);
}

}  // namespace
}  // namespace pbdtest::oracles
