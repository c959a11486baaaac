#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "pbdtest/distribution.hpp"
#include "pbdtest/rng.hpp"
#include "pbdtest/sampling.hpp"

namespace pbdtest {
namespace {

// Pearson goodness of fit; cells with small expectation are merged into
// their neighbours. Returns the upper-tail p-value.
double chi_squared_p_value(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  int cells = 0;
  double obs_acc = 0.0, exp_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    obs_acc += observed[i];
    exp_acc += expected[i];
    if (exp_acc >= 5.0) {
      stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
      ++cells;
      obs_acc = exp_acc = 0.0;
    }
  }
  if (exp_acc > 0.0) {
    stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
    ++cells;
  }
  if (cells < 2) return 1.0;
  const boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

double goodness_of_fit(const ExplicitDistribution& d, const std::vector<std::int64_t>& samples) {
  std::vector<double> observed(d.size(), 0.0), expected(d.size());
  for (std::int64_t x : samples) observed.at(static_cast<std::size_t>(x - d.lo())) += 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) expected[i] = d.probs()[i] * static_cast<double>(samples.size());
  return chi_squared_p_value(observed, expected);
}

TEST(SplitMix64, KnownAnswer) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.counter(), 1u);
}

TEST(SplitMix64, CounterBasedReplay) {
  SplitMix64 a(42);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 10; ++i) first.push_back(a());
  SplitMix64 b(42, 5);
  for (int i = 5; i < 10; ++i) EXPECT_EQ(b(), first[static_cast<std::size_t>(i)]);
}

TEST(SplitMix64, BelowIsInRangeAndUnbiased) {
  SplitMix64 rng(3);
  std::vector<double> counts(7, 0.0);
  for (int i = 0; i < 70'000; ++i) {
    const std::uint64_t x = rng.below(7);
    ASSERT_LT(x, 7u);
    counts[x] += 1.0;
  }
  EXPECT_GT(chi_squared_p_value(counts, std::vector<double>(7, 10'000.0)), 1e-3);
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(SplitMix64, UniformInUnitInterval) {
  SplitMix64 rng(4);
  double sum = 0.0;
  for (int i = 0; i < 100'000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100'000, 0.5, 0.005);
}

TEST(DeriveSeed, DistinctStreams) {
  std::map<std::uint64_t, int> seen;
  for (std::uint64_t s = 0; s < 10; ++s) {
    for (std::uint64_t id = 0; id < 100; ++id) ++seen[derive_seed(s, id)];
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(DiscreteSampler, InverseCdfGoodnessOfFit) {
  const ExplicitDistribution d = binomial_pmf(20, 0.3);
  DiscreteSampler sampler(d);
  EXPECT_FALSE(sampler.uses_alias());
  SplitMix64 rng(7);
  std::vector<std::int64_t> xs(200'000);
  for (auto& x : xs) x = sampler(rng);
  EXPECT_GT(goodness_of_fit(d, xs), 1e-3);
}

TEST(DiscreteSampler, AliasGoodnessOfFit) {
  const ExplicitDistribution d = binomial_pmf(400, 0.6);
  DiscreteSampler sampler(d);
  EXPECT_TRUE(sampler.uses_alias());
  SplitMix64 rng(8);
  std::vector<std::int64_t> xs(200'000);
  for (auto& x : xs) x = sampler(rng);
  EXPECT_GT(goodness_of_fit(d, xs), 1e-3);
}

TEST(DiscreteSampler, OverflowAtomIsSampled) {
  const ExplicitDistribution d(10, {0.25, 0.25}, 0.5);
  DiscreteSampler sampler(d);
  SplitMix64 rng(9);
  int overflow = 0;
  for (int i = 0; i < 40'000; ++i) {
    const std::int64_t x = sampler(rng);
    if (x == kOverflowSymbol) {
      ++overflow;
    } else {
      ASSERT_TRUE(x == 10 || x == 11);
    }
  }
  EXPECT_NEAR(overflow / 40'000.0, 0.5, 0.01);
}

TEST(DiscreteSampler, ZeroMassSymbolsNeverDrawn) {
  const ExplicitDistribution d(0, {0.5, 0.0, 0.5});
  DiscreteSampler sampler(d);
  SplitMix64 rng(10);
  for (int i = 0; i < 10'000; ++i) ASSERT_NE(sampler(rng), 1);
}

TEST(PoissonVariate, MomentsAndFitAcrossMethods) {
  for (double rate : {0.7, 12.0, 29.9, 30.0, 250.0, 5000.0}) {
    SplitMix64 rng(static_cast<std::uint64_t>(rate * 10));
    const ExplicitDistribution d = poisson_pmf(rate, 1e-12);
    std::vector<std::int64_t> xs(100'000);
    double sum = 0.0, sq = 0.0;
    for (auto& x : xs) {
      x = static_cast<std::int64_t>(poisson_variate(rng, rate));
      sum += static_cast<double>(x);
      sq += static_cast<double>(x) * static_cast<double>(x);
    }
    const double n = static_cast<double>(xs.size());
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    EXPECT_NEAR(mean, rate, 5.0 * std::sqrt(rate / n)) << rate;
    EXPECT_NEAR(var / rate, 1.0, 0.03) << rate;
    std::vector<double> observed(d.size(), 0.0), expected(d.size());
    for (std::int64_t x : xs) {
      if (d.support().contains(x)) observed[static_cast<std::size_t>(x - d.lo())] += 1.0;
    }
    for (std::size_t i = 0; i < d.size(); ++i) expected[i] = d.probs()[i] * n;
    EXPECT_GT(chi_squared_p_value(observed, expected), 1e-3) << rate;
  }
  SplitMix64 rng(1);
  EXPECT_THROW(poisson_variate(rng, -1.0), std::invalid_argument);
}

TEST(SampleStream, Examples) {
  SampleStream empty = SampleStream::from_distribution(binomial_pmf(4, 0.5), 1);
  EXPECT_TRUE(empty.draw(0).empty());
  SampleStream point = SampleStream::from_distribution(ExplicitDistribution::point_mass(7), 1);
  EXPECT_EQ(point.draw(5), (std::vector<std::int64_t>{7, 7, 7, 7, 7}));
  EXPECT_EQ(point.consumed(), 5u);
}

TEST(SampleStream, BinomialMeanInCltBand) {
  SampleStream s = SampleStream::from_distribution(binomial_pmf(100, 0.5), 123);
  const auto xs = s.draw(100'000);
  double sum = 0.0;
  for (auto x : xs) sum += static_cast<double>(x);
  EXPECT_NEAR(sum / 1e5, 50.0, 4.0 * 5.0 / std::sqrt(1e5));
}

TEST(SampleStream, SameSeedSameSequence) {
  const ExplicitDistribution d = binomial_pmf(1000, 0.4);
  SampleStream a = SampleStream::from_distribution(d, 99);
  SampleStream b = SampleStream::from_distribution(d, 99);
  EXPECT_EQ(a.draw(1000), b.draw(1000));
  SampleStream c = SampleStream::from_distribution(d, 100);
  EXPECT_NE(a.draw(1000), c.draw(1000));
}

TEST(SampleStream, SplitsAreIndependentOfParentProgress) {
  const ExplicitDistribution d = binomial_pmf(50, 0.4);
  SampleStream a = SampleStream::from_distribution(d, 5);
  SampleStream b = SampleStream::from_distribution(d, 5);
  (void)b.draw(10);
  EXPECT_EQ(a.split(3).draw(100), b.split(3).draw(100));
  EXPECT_NE(a.split(3).draw(100), a.split(4).draw(100));
}

TEST(SampleStream, HistogramTotals) {
  SampleStream s = SampleStream::from_distribution(binomial_pmf(30, 0.5), 6);
  const SampleHistogram h = s.draw_histogram(5000);
  EXPECT_EQ(h.total(), 5000u);
  EXPECT_FALSE(h.poissonized());
  EXPECT_DOUBLE_EQ(h.nominal_rate(), 5000.0);
  std::uint64_t sum = h.overflow();
  for (auto c : h.counts()) sum += c;
  EXPECT_EQ(sum, h.total());
}

TEST(SampleStream, PoissonizedPointMass) {
  SampleStream s = SampleStream::from_distribution(ExplicitDistribution::point_mass(0), 2);
  const SampleHistogram h = s.poissonized_histogram(10.0);
  EXPECT_TRUE(h.poissonized());
  EXPECT_DOUBLE_EQ(h.nominal_rate(), 10.0);
  EXPECT_EQ(h.count(0), h.total());
  EXPECT_THROW(s.poissonized_histogram(0.0), std::invalid_argument);
}

// Per-symbol Poissonized counts are independent Poisson(k P(i)).
TEST(SampleStream, PoissonizedCountsFitPoisson) {
  const ExplicitDistribution d(0, {0.1, 0.2, 0.3, 0.4});
  const double k = 25.0;
  SampleStream s = SampleStream::from_distribution(d, 77);
  constexpr int kTrials = 10'000;
  std::vector<std::vector<double>> observed(4, std::vector<double>(200, 0.0));
  double cross = 0.0, m0 = 0.0, m3 = 0.0;
  for (int t = 0; t < kTrials; ++t) {
    const SampleHistogram h = s.poissonized_histogram(k);
    for (std::int64_t i = 0; i < 4; ++i) observed[static_cast<std::size_t>(i)][h.count(i)] += 1.0;
    cross += static_cast<double>(h.count(0)) * static_cast<double>(h.count(3));
    m0 += static_cast<double>(h.count(0));
    m3 += static_cast<double>(h.count(3));
  }
  for (std::int64_t i = 0; i < 4; ++i) {
    const ExplicitDistribution pois = poisson_pmf(k * d(i), 1e-12);
    std::vector<double> expected(200, 0.0);
    for (std::int64_t x = pois.lo(); x <= pois.hi() && x < 200; ++x) {
      expected[static_cast<std::size_t>(x)] = pois(x) * kTrials;
    }
    EXPECT_GT(chi_squared_p_value(observed[static_cast<std::size_t>(i)], expected), 1e-3) << i;
  }
  // Covariance of counts near zero (independence): sd of the estimate is about
  // sqrt(2.5 * 10) / sqrt(trials).
  const double cov = cross / kTrials - (m0 / kTrials) * (m3 / kTrials);
  EXPECT_LT(std::abs(cov), 5.0 * std::sqrt(25.0) / std::sqrt(static_cast<double>(kTrials)));
}

TEST(EmpiricalDistribution, Examples) {
  const std::vector<std::int64_t> xs = {0, 0, 1};
  const ExplicitDistribution e = empirical_distribution(xs, {0, 1});
  EXPECT_DOUBLE_EQ(e(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(e(1), 1.0 / 3.0);
  const std::vector<std::int64_t> fives(9, 5);
  const ExplicitDistribution f = empirical_distribution(fives, {5, 5});
  EXPECT_DOUBLE_EQ(f(5), 1.0);
  EXPECT_THROW(empirical_distribution(std::vector<std::int64_t>{}, {0, 1}), std::invalid_argument);
}

TEST(EmpiricalDistribution, OutsideMassGoesToOverflow) {
  const std::vector<std::int64_t> xs = {0, 1, 2, 9};
  const ExplicitDistribution e = empirical_distribution(xs, {0, 2});
  EXPECT_DOUBLE_EQ(e.overflow(), 0.25);
  EXPECT_NEAR(e.total_mass(), 1.0, 1e-15);
}

TEST(SampleFile, RoundTripAndExhaustion) {
  const auto path = std::filesystem::temp_directory_path() / "pbdtest_sampling_roundtrip.txt";
  const std::vector<std::int64_t> xs = {3, 0, 17, 4};
  write_sample_file(path, xs);
  EXPECT_EQ(read_sample_file(path), xs);

  SampleStream s = SampleStream::from_samples(read_sample_file(path), 0);
  EXPECT_TRUE(s.file_backed());
  EXPECT_EQ(s.draw(2), (std::vector<std::int64_t>{3, 0}));
  SampleStream child = s.split(1);
  EXPECT_EQ(child.draw_one(), 17);
  EXPECT_EQ(s.draw_one(), 4);
  EXPECT_THROW(s.draw_one(), StreamExhausted);
  std::filesystem::remove(path);
}

TEST(SampleFile, RejectsMalformedLines) {
  const auto path = std::filesystem::temp_directory_path() / "pbdtest_sampling_bad.txt";
  std::ofstream(path) << "1\n-2\n";
  EXPECT_THROW(read_sample_file(path), std::runtime_error);
  std::ofstream(path) << "1\nabc\n";
  EXPECT_THROW(read_sample_file(path), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_ANY_THROW(read_sample_file(path));
}

}  // namespace
}  // namespace pbdtest
