#include <gtest/gtest.h>

#include <cmath>

#include "pbdtest/dist_spec.hpp"

namespace pbdtest {
namespace {

using nlohmann::json;

TEST(DistSpec, EachKindRoundTrips) {
  const std::vector<json> inputs = {
      {{"kind", "pbd"}, {"ps", {0.1, 0.5}}, {"shift", 3}},
      {{"kind", "binomial"}, {"n", 10}, {"p", 0.25}},
      {{"kind", "tp"}, {"mu", 10.5}, {"sigma2", 4.0}},
      {{"kind", "explicit"}, {"lo", -2}, {"probs", {0.5, 0.25, 0.25}}},
      {{"kind", "perturbed_binomial"}, {"n", 8}, {"c", 1.0}, {"eps", 0.5}, {"z", {1, -1, 1, -1}}},
  };
  for (const json& in : inputs) {
    const DistSpec spec = parse_dist_spec(in);
    const json canonical = to_json(spec);
    EXPECT_EQ(canonical["schema_version"], kSchemaVersion);
    EXPECT_EQ(to_json(parse_dist_spec(canonical)), canonical) << in.dump();
    EXPECT_NEAR(materialize(spec).total_mass() + materialize(spec).omitted_mass(), 1.0, 1e-9);
  }
}

TEST(DistSpec, PointsFormIsCanonicalized) {
  const DistSpec spec = parse_dist_spec(json{{"kind", "explicit"}, {"points", {{0, 0.5}, {2, 0.5}}}});
  const ExplicitDistribution d = materialize(spec);
  EXPECT_EQ(d.lo(), 0);
  EXPECT_DOUBLE_EQ(d(0), 0.5);
  EXPECT_DOUBLE_EQ(d(1), 0.0);
  EXPECT_DOUBLE_EQ(d(2), 0.5);
  EXPECT_FALSE(to_json(spec).contains("points"));
}

TEST(DistSpec, SeededSignsAreReproducible) {
  const json in = {{"kind", "perturbed_binomial"}, {"n", 64}, {"c", 1.0}, {"eps", 0.2}, {"z_seed", 9}};
  EXPECT_EQ(to_json(parse_dist_spec(in)), to_json(parse_dist_spec(in)));
  EXPECT_EQ(to_json(parse_dist_spec(in))["z"].size(), 32u);
}

TEST(DistSpec, ShiftMovesThePmf) {
  const ExplicitDistribution d = materialize(parse_dist_spec(json{{"kind", "pbd"}, {"ps", {0.5}}, {"shift", 4}}));
  EXPECT_DOUBLE_EQ(d(4), 0.5);
  EXPECT_DOUBLE_EQ(d(5), 0.5);
}

TEST(DistSpec, RejectsMalformedInput) {
  EXPECT_THROW(parse_dist_spec(json::array()), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "gamma"}}), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "binomial"}, {"n", 10}}), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "binomial"}, {"n", 10}, {"p", 2.0}}), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "binomial"}, {"n", "ten"}, {"p", 0.5}}), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "tp"}, {"mu", 1.0}, {"sigma2", 0.0}}), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "pbd"}, {"ps", {1.5}}}), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "explicit"}, {"lo", 0}, {"probs", {0.3}}}), std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "binomial"}, {"n", 1}, {"p", 0.5}, {"schema_version", 7}}),
               std::invalid_argument);
  EXPECT_THROW(parse_dist_spec(json{{"kind", "perturbed_binomial"}, {"n", 7}, {"c", 1.0}, {"eps", 0.1}, {"z_seed", 1}}),
               std::invalid_argument);
}

}  // namespace
}  // namespace pbdtest
