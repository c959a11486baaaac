#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "pbdtest/distribution.hpp"
#include "pbdtest/rng.hpp"

namespace pbdtest {

/// Symbol returned for draws that land on an overflow atom.
inline constexpr std::int64_t kOverflowSymbol = std::numeric_limits<std::int64_t>::min();

/// Draws from an ExplicitDistribution with integer-only decisions: thresholds
/// are precomputed as 64-bit integers, so a given RNG stream maps to the same
/// symbols on every platform. Inverse CDF below 64 atoms, Vose alias above.
/// Omitted (truncated) mass is renormalized away.
class DiscreteSampler {
 public:
  static constexpr std::size_t kAliasThreshold = 64;

  explicit DiscreteSampler(const ExplicitDistribution& dist);

  std::int64_t operator()(SplitMix64& rng) const;

  std::int64_t lo() const { return lo_; }
  std::size_t dense_size() const { return dense_size_; }
  bool uses_alias() const { return !alias_.empty(); }

 private:
  std::int64_t symbol(std::size_t index) const {
    return index < dense_size_ ? lo_ + static_cast<std::int64_t>(index) : kOverflowSymbol;
  }

  std::int64_t lo_;
  std::size_t dense_size_;
  std::size_t atoms_;
  std::vector<std::uint64_t> cumulative_;  // inverse-CDF path
  std::vector<std::uint64_t> threshold_;   // alias path
  std::vector<std::uint32_t> alias_;
};

/// Poisson(rate) variate: inversion below rate 30, PTRS transformed
/// rejection above.
std::uint64_t poisson_variate(SplitMix64& rng, double rate);

/// Per-symbol counts over a dense, growable range plus an overflow bin.
class SampleHistogram {
 public:
  SampleHistogram() = default;
  /// Pre-sizes the dense range [lo, lo + size).
  SampleHistogram(std::int64_t lo, std::size_t size);

  void add(std::int64_t x, std::uint64_t times = 1);

  bool empty() const { return total_ == 0; }
  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return lo_ + static_cast<std::int64_t>(counts_.size()) - 1; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::uint64_t count(std::int64_t x) const;
  std::uint64_t overflow() const { return overflow_; }
  /// K, the number of samples binned.
  std::uint64_t total() const { return total_; }
  /// k, the nominal sample rate.
  double nominal_rate() const { return nominal_rate_; }
  bool poissonized() const { return poissonized_; }
  void set_nominal(double rate, bool poissonized) {
    nominal_rate_ = rate;
    poissonized_ = poissonized;
  }

  /// Smallest and largest observed integer symbols; requires a non-overflow sample.
  Interval observed_range() const;

 private:
  std::int64_t lo_ = 0;
  std::vector<std::uint64_t> counts_;
  std::uint64_t overflow_ = 0;
  std::uint64_t total_ = 0;
  double nominal_rate_ = 0.0;
  bool poissonized_ = false;
};

class StreamExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source of i.i.d. samples, backed either by a known distribution and a seed
/// or by a recorded sample file. Single owner; not thread-safe.
///
/// split(id) derives an independent sub-stream. Distribution-backed splits get
/// their own RNG; file-backed splits share one read cursor, so every stage
/// consumes samples nobody else has seen.
class SampleStream {
 public:
  static SampleStream from_distribution(const ExplicitDistribution& dist, std::uint64_t seed);
  static SampleStream from_samples(std::vector<std::int64_t> samples, std::uint64_t seed);

  std::int64_t draw_one();
  std::vector<std::int64_t> draw(std::uint64_t k);
  /// k fixed-size draws binned directly.
  SampleHistogram draw_histogram(std::uint64_t k);
  /// K ~ Poisson(rate) draws binned; nominal rate recorded.
  SampleHistogram poissonized_histogram(double rate);

  SampleStream split(std::uint64_t id) const;

  std::uint64_t seed() const { return rng_.seed(); }
  /// Samples drawn through this stream object (splits count separately).
  std::uint64_t consumed() const { return consumed_; }
  bool file_backed() const { return file_ != nullptr; }
  SplitMix64& rng() { return rng_; }

 private:
  struct FileSource {
    std::vector<std::int64_t> samples;
    std::size_t cursor = 0;
  };

  SampleStream(std::shared_ptr<const DiscreteSampler> sampler,
               std::shared_ptr<FileSource> file, std::uint64_t seed)
      : sampler_(std::move(sampler)), file_(std::move(file)), rng_(seed) {}

  SampleHistogram make_histogram() const;

  std::shared_ptr<const DiscreteSampler> sampler_;
  std::shared_ptr<FileSource> file_;
  SplitMix64 rng_;
  std::uint64_t consumed_ = 0;
};

std::vector<std::int64_t> draw_samples(SampleStream& stream, std::uint64_t k);
SampleHistogram poissonized_histogram(SampleStream& stream, double k);

/// probs[i] = count(i) / k on `support`; everything else goes to overflow.
ExplicitDistribution empirical_distribution(std::span<const std::int64_t> samples, Interval support);
ExplicitDistribution empirical_distribution(const SampleHistogram& hist, Interval support);

/// Text format: one nonnegative integer per line; blank lines are ignored.
std::vector<std::int64_t> read_sample_file(const std::filesystem::path& path);
void write_sample_file(const std::filesystem::path& path, std::span<const std::int64_t> samples);

}  // namespace pbdtest
