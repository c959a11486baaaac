#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace pbdtest {

/// Constants of the substitute learner.
struct LearnerConstants {
  double A_L = 1.0;    // batch size multiplier: ceil(A_L logt^2(1/eps) / eps^2)
  double A_t = 0.08;   // binomial fit when variance >= A_t / eps^2
  double A_s = 4.0;    // sparse support cap ceil(A_s / eps^3)
  double A_m = 200.0;  // moment estimation: ceil(A_m / eps'^2) samples
  int em_max_iterations = 2000;
  int em_max_variables = 128;  // EM cost grows with the square of this
  double em_tolerance = 1e-9;  // stop once the log-likelihood gains less per sample
};

/// Accuracy targets and every tunable constant of the tester.
struct TestConfig {
  double eps = 0.1;
  double delta = 0.1;
  std::uint64_t seed = 0;

  double C = 4.0;          // heavy branch when variance >= C logt^4(1/eps) / eps^8
  double C_prime = 10.0;   // closeness constant, at least 10
  double C1 = 1500.0;      // l2 sample rate multiplier
  double c_l2 = 0.0095;    // l2 far-side constant
  double A_tol = 10.0;     // tolerant identity test: ceil(A_tol m / eps^2)
  double B = 18.0;         // repetitions ceil(B ln(1/delta)), rounded up to odd
  double learner_eps_factor = 0.1;
  double tail_cut = 1e-9;
  /// Multiplies every stage's sample count; 1 is the full budget.
  double sample_scale = 1.0;
  int threads = 1;
  LearnerConstants learner;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const TestConfig& config);
/// Overlays the keys present in `overrides`; unknown keys are an error.
TestConfig apply_overrides(TestConfig base, const nlohmann::json& overrides);
TestConfig load_config_file(const std::filesystem::path& path, TestConfig base = {});
/// Compiled defaults, overlaid with the file named by PBDTEST_CONFIG if set.
TestConfig default_config();

}  // namespace pbdtest
