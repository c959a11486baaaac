#pragma once

#include <filesystem>
#include <variant>

#include "json.hpp"
#include "pbdtest/distribution.hpp"
#include "pbdtest/learner.hpp"
#include "pbdtest/lowerbound.hpp"

namespace pbdtest {

/// Distribution descriptions shared by the CLI and artifacts.
///
///   {"kind": "pbd", "ps": [...], "shift": 0}
///   {"kind": "binomial", "n": 100, "p": 0.5}
///   {"kind": "tp", "mu": 10.5, "sigma2": 4.0}
///   {"kind": "explicit", "lo": 0, "probs": [...]}
///   {"kind": "explicit", "points": [[0, 0.5], [7, 0.5]]}
///   {"kind": "perturbed_binomial", "n": 64, "c": 1, "eps": 0.2, "z": [...]}
///   {"kind": "perturbed_binomial", "n": 64, "c": 1, "eps": 0.2, "z_seed": 3}
///
/// "shift" counts certain successes and defaults to 0. An optional
/// "schema_version" must equal kSchemaVersion.
struct PbdSpec {
  Pbd pbd;
  std::int64_t shift = 0;
};
struct BinomialSpec {
  std::int64_t n = 0;
  double p = 0.0;
};
struct TpSpec {
  double mu = 0.0;
  double sigma2 = 1.0;
};
struct ExplicitSpec {
  ExplicitDistribution dist = ExplicitDistribution::point_mass(0);
};

using DistSpec = std::variant<PbdSpec, BinomialSpec, TpSpec, ExplicitSpec, PerturbedBinomial>;

/// Throws std::invalid_argument on malformed input.
DistSpec parse_dist_spec(const nlohmann::json& j);
DistSpec load_dist_spec(const std::filesystem::path& path);
/// Canonical form: "points" becomes "lo"/"probs" and "z_seed" becomes "z".
nlohmann::json to_json(const DistSpec& spec);

/// PMF of the spec; TP specs are truncated at `tail_cut`.
ExplicitDistribution materialize(const DistSpec& spec, double tail_cut = 1e-12);

DistSpec to_spec(const LearnedPbd& learned);

}  // namespace pbdtest
