#include "pbdtest/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

namespace pbdtest {

namespace {

constexpr long double kTwo64 = 18446744073709551616.0L;

std::uint64_t scale_to_u64(long double fraction) {
  if (fraction <= 0.0L) return 0;
  const long double scaled = fraction * kTwo64;
  if (scaled >= kTwo64) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(scaled);
}

}  // namespace

//---------------------------------------------------------------------------//
// DiscreteSampler
//---------------------------------------------------------------------------//

DiscreteSampler::DiscreteSampler(const ExplicitDistribution& dist)
    : lo_(dist.lo()), dense_size_(dist.size()) {
  std::vector<long double> w(dist.probs().begin(), dist.probs().end());
  if (dist.overflow() > 0.0) w.push_back(dist.overflow());
  atoms_ = w.size();
  long double total = 0.0L;
  for (long double v : w) total += v;
  if (!(total > 0.0L)) throw std::invalid_argument("DiscreteSampler: zero total mass");

  if (atoms_ < kAliasThreshold) {
    cumulative_.resize(atoms_);
    long double acc = 0.0L;
    for (std::size_t j = 0; j < atoms_; ++j) {
      acc += w[j];
      cumulative_[j] = scale_to_u64(acc / total);
    }
    cumulative_.back() = std::numeric_limits<std::uint64_t>::max();
    return;
  }

  // Vose's alias construction on probabilities scaled by the atom count.
  const auto m = static_cast<long double>(atoms_);
  std::vector<long double> scaled(atoms_);
  for (std::size_t j = 0; j < atoms_; ++j) scaled[j] = w[j] / total * m;
  threshold_.assign(atoms_, std::numeric_limits<std::uint64_t>::max());
  alias_.resize(atoms_);
  std::vector<std::uint32_t> small, large;
  for (std::size_t j = 0; j < atoms_; ++j) {
    alias_[j] = static_cast<std::uint32_t>(j);
    (scaled[j] < 1.0L ? small : large).push_back(static_cast<std::uint32_t>(j));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    threshold_[s] = scale_to_u64(scaled[s]);
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0L;
    if (scaled[l] < 1.0L) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are full columns up to rounding.
}

std::int64_t DiscreteSampler::operator()(SplitMix64& rng) const {
  if (alias_.empty()) {
    const std::uint64_t u = rng();
    std::size_t j = 0;
    while (j + 1 < atoms_ && u >= cumulative_[j]) ++j;
    return symbol(j);
  }
  const auto column = static_cast<std::size_t>(rng.below(atoms_));
  const std::uint64_t coin = rng();
  if (threshold_[column] == std::numeric_limits<std::uint64_t>::max() ||
      coin < threshold_[column]) {
    return symbol(column);
  }
  return symbol(alias_[column]);
}

//---------------------------------------------------------------------------//
// Poisson variates
//---------------------------------------------------------------------------//

std::uint64_t poisson_variate(SplitMix64& rng, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("poisson_variate: rate must be finite and nonnegative");
  }
  if (rate == 0.0) return 0;
  if (rate < 30.0) {
    const double start = std::exp(-rate);
    for (;;) {
      const double u = rng.uniform();
      double p = start;
      double cdf = p;
      std::uint64_t x = 0;
      // The cap only guards against the CDF stalling below u by rounding.
      while (u > cdf && x < 1000) {
        ++x;
        p *= rate / static_cast<double>(x);
        cdf += p;
      }
      if (x < 1000) return x;
    }
  }
  // Hormann's PTRS with the usual constants.
  const double slam = std::sqrt(rate);
  const double loglam = std::log(rate);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    const auto ki = static_cast<std::int64_t>(k);
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -rate + k * loglam - log_factorial(ki)) {
      return static_cast<std::uint64_t>(ki);
    }
  }
}

//---------------------------------------------------------------------------//
// SampleHistogram
//---------------------------------------------------------------------------//

SampleHistogram::SampleHistogram(std::int64_t lo, std::size_t size) : lo_(lo), counts_(size, 0) {}

void SampleHistogram::add(std::int64_t x, std::uint64_t times) {
  total_ += times;
  if (x == kOverflowSymbol) {
    overflow_ += times;
    return;
  }
  if (counts_.empty()) {
    lo_ = x;
    counts_.assign(1, 0);
  } else if (x < lo_) {
    counts_.insert(counts_.begin(), static_cast<std::size_t>(lo_ - x), 0);
    lo_ = x;
  } else if (x > hi()) {
    counts_.resize(static_cast<std::size_t>(x - lo_) + 1, 0);
  }
  counts_[static_cast<std::size_t>(x - lo_)] += times;
}

std::uint64_t SampleHistogram::count(std::int64_t x) const {
  if (x == kOverflowSymbol) return overflow_;
  if (counts_.empty() || x < lo_ || x > hi()) return 0;
  return counts_[static_cast<std::size_t>(x - lo_)];
}

Interval SampleHistogram::observed_range() const {
  std::size_t first = 0;
  while (first < counts_.size() && counts_[first] == 0) ++first;
  if (first == counts_.size()) throw std::logic_error("observed_range: no integer samples");
  std::size_t last = counts_.size() - 1;
  while (counts_[last] == 0) --last;
  return {lo_ + static_cast<std::int64_t>(first), lo_ + static_cast<std::int64_t>(last)};
}

//---------------------------------------------------------------------------//
// SampleStream
//---------------------------------------------------------------------------//

SampleStream SampleStream::from_distribution(const ExplicitDistribution& dist, std::uint64_t seed) {
  return SampleStream(std::make_shared<const DiscreteSampler>(dist), nullptr, seed);
}

SampleStream SampleStream::from_samples(std::vector<std::int64_t> samples, std::uint64_t seed) {
  auto file = std::make_shared<FileSource>();
  file->samples = std::move(samples);
  return SampleStream(nullptr, std::move(file), seed);
}

std::int64_t SampleStream::draw_one() {
  ++consumed_;
  if (sampler_) return (*sampler_)(rng_);
  if (file_->cursor >= file_->samples.size()) {
    throw StreamExhausted("sample file exhausted after " + std::to_string(file_->cursor) +
                          " samples");
  }
  return file_->samples[file_->cursor++];
}

std::vector<std::int64_t> SampleStream::draw(std::uint64_t k) {
  std::vector<std::int64_t> out;
  out.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) out.push_back(draw_one());
  return out;
}

SampleHistogram SampleStream::make_histogram() const {
  if (sampler_) return SampleHistogram(sampler_->lo(), sampler_->dense_size());
  return SampleHistogram();
}

SampleHistogram SampleStream::draw_histogram(std::uint64_t k) {
  SampleHistogram hist = make_histogram();
  for (std::uint64_t i = 0; i < k; ++i) hist.add(draw_one());
  hist.set_nominal(static_cast<double>(k), false);
  return hist;
}

SampleHistogram SampleStream::poissonized_histogram(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("poissonized_histogram: rate must be positive");
  const std::uint64_t count = poisson_variate(rng_, rate);
  SampleHistogram hist = make_histogram();
  for (std::uint64_t i = 0; i < count; ++i) hist.add(draw_one());
  hist.set_nominal(rate, true);
  return hist;
}

SampleStream SampleStream::split(std::uint64_t id) const {
  return SampleStream(sampler_, file_, derive_seed(rng_.seed(), id));
}

std::vector<std::int64_t> draw_samples(SampleStream& stream, std::uint64_t k) {
  return stream.draw(k);
}

SampleHistogram poissonized_histogram(SampleStream& stream, double k) {
  return stream.poissonized_histogram(k);
}

//---------------------------------------------------------------------------//
// Empirical distributions and sample files
//---------------------------------------------------------------------------//

ExplicitDistribution empirical_distribution(std::span<const std::int64_t> samples,
                                            Interval support) {
  if (samples.empty()) throw std::invalid_argument("empirical_distribution: no samples");
  SampleHistogram hist;
  for (std::int64_t x : samples) hist.add(x);
  return empirical_distribution(hist, support);
}

ExplicitDistribution empirical_distribution(const SampleHistogram& hist, Interval support) {
  if (hist.total() == 0) throw std::invalid_argument("empirical_distribution: no samples");
  if (support.hi < support.lo) throw std::invalid_argument("empirical_distribution: empty support");
  const auto k = static_cast<double>(hist.total());
  std::vector<double> probs(static_cast<std::size_t>(support.length()));
  std::uint64_t inside = 0;
  for (std::int64_t x = support.lo; x <= support.hi; ++x) {
    const std::uint64_t c = hist.count(x);
    inside += c;
    probs[static_cast<std::size_t>(x - support.lo)] = static_cast<double>(c) / k;
  }
  const double overflow = static_cast<double>(hist.total() - inside) / k;
  return ExplicitDistribution(support.lo, std::move(probs), overflow);
}

std::vector<std::int64_t> read_sample_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sample file " + path.string());
  std::vector<std::int64_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::int64_t v = 0;
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || v < 0) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected a nonnegative integer");
    }
    out.push_back(v);
  }
  return out;
}

void write_sample_file(const std::filesystem::path& path, std::span<const std::int64_t> samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sample file " + path.string());
  for (std::int64_t x : samples) {
    if (x < 0) throw std::invalid_argument("write_sample_file: negative sample");
    out << x << '\n';
  }
}

}  // namespace pbdtest
