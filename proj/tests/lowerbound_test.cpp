#include <gtest/gtest.h>

#include <cmath>

#include "pbdtest/distribution.hpp"
#include "pbdtest/lowerbound.hpp"
#include "pbdtest/oracles.hpp"
#include "pbdtest/rng.hpp"

namespace pbdtest {
namespace {

TEST(PerturbedBinomial, SmallExample) {
  const ExplicitDistribution q = construct_perturbed_binomial({4, 1.0, 0.5, {+1, -1}});
  const double expected[] = {0.5 / 16, 6.0 / 16, 6.0 / 16, 2.0 / 16, 1.5 / 16};
  for (std::int64_t x = 0; x <= 4; ++x) EXPECT_NEAR(q(x), expected[x], 1e-15) << x;
}

TEST(PerturbedBinomial, MassConservedAndZeroEpsIsBinomial) {
  SplitMix64 rng(1);
  const std::vector<int> z = random_signs(512, rng);
  EXPECT_NEAR(construct_perturbed_binomial({1024, 1.5, 0.3, z}).total_mass(), 1.0, 1e-12);
  const ExplicitDistribution p0 = binomial_pmf(1024, 0.5);
  EXPECT_LT(tv_distance(construct_perturbed_binomial({1024, 1.0, 0.0, z}), p0), 1e-15);
}

TEST(PerturbedBinomial, Validation) {
  EXPECT_THROW(construct_perturbed_binomial({5, 1.0, 0.1, {1, 1}}), std::invalid_argument);
  EXPECT_THROW(construct_perturbed_binomial({4, 1.0, 0.1, {1}}), std::invalid_argument);
  EXPECT_THROW(construct_perturbed_binomial({4, 1.0, 0.1, {1, 2}}), std::invalid_argument);
  EXPECT_THROW(construct_perturbed_binomial({4, 4.0, 0.5, {1, 1}}), std::invalid_argument);
}

TEST(RandomSigns, BalancedAndDeterministic) {
  SplitMix64 a(2), b(2);
  const std::vector<int> za = random_signs(10'000, a);
  EXPECT_EQ(za, random_signs(10'000, b));
  int sum = 0;
  for (int v : za) {
    ASSERT_TRUE(v == 1 || v == -1);
    sum += v;
  }
  EXPECT_LT(std::abs(sum), 400);
}

TEST(Window, Clipping) {
  EXPECT_EQ(lower_bound_window(4), (Interval{0, 4}));
  EXPECT_EQ(lower_bound_window(10'000), (Interval{4600, 5400}));
}

TEST(UnimodalLb, Examples) {
  EXPECT_DOUBLE_EQ(unimodal_distance_lb(binomial_pmf(20, 0.5), {0, 20}), 0.0);
  const ExplicitDistribution spikes(0, {0.5, 0.0, 0.5});
  EXPECT_NEAR(unimodal_distance_lb(spikes, {0, 2}), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(unimodal_distance_lb(spikes, {1, 0}), 0.0);
}

TEST(UnimodalLb, BelowExactDistance) {
  SplitMix64 rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(12);
    double s = 0.0;
    for (double& x : v) s += (x = rng.uniform());
    for (double& x : v) x /= s;
    const ExplicitDistribution q(0, v);
    EXPECT_LE(unimodal_distance_lb(q, {0, 11}) / 2.0, oracles::exact_tv_to_unimodal(q) + 1e-9);
  }
}

TEST(Chi2Bound, Shape) {
  EXPECT_DOUBLE_EQ(chi2_indistinguishability_bound(64, 1.0, 0.2, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(chi2_indistinguishability_bound(64, 1.0, 0.0, 1e6), 0.0);
  EXPECT_DOUBLE_EQ(chi2_indistinguishability_bound(64, 1.0, 0.2, 1e12), 1.0);
  EXPECT_LT(chi2_indistinguishability_bound(4096, 1.0, 0.2, 100.0),
            chi2_indistinguishability_bound(4096, 1.0, 0.2, 200.0));
  EXPECT_THROW(half_collision_mass(7), std::invalid_argument);
  EXPECT_NEAR(half_collision_mass(2), 1.0 / 16.0, 1e-15);
}

TEST(Regime, Helpers) {
  EXPECT_DOUBLE_EQ(admissible_c(4.0, 0.5), 1.8);
  EXPECT_DOUBLE_EQ(admissible_c(1.0, 0.5), 1.0);
  EXPECT_TRUE(lower_bound_regime_met(1'000'000, 300.0, 0.2));
  EXPECT_FALSE(lower_bound_regime_met(4096, 300.0, 0.2));
  EXPECT_FALSE(lower_bound_regime_met(1'000'000, 4.0, 0.2));
}

TEST(Detection, ZeroTrialsIsEmpty) {
  DetectionSettings s;
  s.c = 10.0;
  s.eps = 0.2;
  s.trials = 0;
  const DetectionReport r = detection_experiment(s);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_TRUE(r.c_scaled);
  EXPECT_DOUBLE_EQ(r.c_used, 4.5);
}

TEST(Detection, SmallRunAndCsv) {
  DetectionSettings s;
  s.n = 256;
  s.c = 2.0;
  s.eps = 0.2;
  s.k_grid = {16.0};
  s.include_full_budget = false;
  s.trials = 4;
  const DetectionReport r = detection_experiment(s);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_GE(r.rows[0].detect_rate, 0.0);
  EXPECT_LE(r.rows[0].detect_rate, 1.0);
  EXPECT_GT(r.full_budget, 0.0);
  const std::string csv = detection_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "k_cap,full_budget,sample_scale,mean_samples,max_samples,detect_rate,false_reject_rate,"
            "advantage,advantage_se,chi2_bound,lr_advantage,lr_se,lr_chi2_bound");
  EXPECT_EQ(detection_csv(detection_experiment(s)), csv);
}

TEST(LikelihoodRatio, SeparatesAtLargeK) {
  const LrResult big = likelihood_ratio_advantage(64, 4.0, 0.2, 1e5, 200, 5);
  EXPECT_GT(big.advantage, 0.9);
  const LrResult tiny = likelihood_ratio_advantage(64, 1.0, 0.05, 1.0, 200, 6);
  EXPECT_LT(tiny.advantage, 0.2);
}

}  // namespace
}  // namespace pbdtest
