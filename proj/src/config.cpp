#include "pbdtest/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

namespace pbdtest {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("config: ") + what);
}

template <class T>
void overlay(const nlohmann::json& j, const char* key, T& field) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    field = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace

void TestConfig::validate() const {
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(C > 0.0, "C must be positive");
  require(C_prime >= 10.0, "C_prime must be at least 10");
  require(C1 > 0.0 && c_l2 > 0.0, "C1 and c_l2 must be positive");
  require(A_tol > 0.0 && B > 0.0, "A_tol and B must be positive");
  require(learner_eps_factor > 0.0 && learner_eps_factor <= 1.0,
          "learner_eps_factor must lie in (0, 1]");
  require(tail_cut > 0.0 && tail_cut <= 1e-6, "tail_cut must lie in (0, 1e-6]");
  require(sample_scale > 0.0 && sample_scale <= 1.0, "sample_scale must lie in (0, 1]");
  require(threads >= 1, "threads must be at least 1");
  require(learner.A_L > 0.0 && learner.A_t > 0.0 && learner.A_s > 0.0 && learner.A_m > 0.0,
          "learner constants must be positive");
  require(learner.em_max_iterations >= 1 && learner.em_max_variables >= 1 &&
              learner.em_tolerance > 0.0,
          "EM limits must be positive");
}

nlohmann::json to_json(const TestConfig& c) {
  return {
      {"eps", c.eps},
      {"delta", c.delta},
      {"seed", c.seed},
      {"C", c.C},
      {"C_prime", c.C_prime},
      {"C1", c.C1},
      {"c_l2", c.c_l2},
      {"A_tol", c.A_tol},
      {"B", c.B},
      {"learner_eps_factor", c.learner_eps_factor},
      {"tail_cut", c.tail_cut},
      {"sample_scale", c.sample_scale},
      {"threads", c.threads},
      {"learner",
       {{"A_L", c.learner.A_L},
        {"A_t", c.learner.A_t},
        {"A_s", c.learner.A_s},
        {"A_m", c.learner.A_m},
        {"em_max_iterations", c.learner.em_max_iterations},
        {"em_max_variables", c.learner.em_max_variables},
        {"em_tolerance", c.learner.em_tolerance}}},
  };
}

TestConfig apply_overrides(TestConfig c, const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: overrides must be a JSON object");
  static const char* const kTop[] = {"schema_version", "eps", "delta", "seed", "C", "C_prime",
                                     "C1", "c_l2", "A_tol", "B", "learner_eps_factor",
                                     "tail_cut", "sample_scale", "threads", "learner"};
  static const char* const kLearner[] = {"A_L", "A_t", "A_s", "A_m", "em_max_iterations", "em_max_variables",
                                         "em_tolerance"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kTop), std::end(kTop), key) == std::end(kTop)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (auto it = j.find("schema_version"); it != j.end() && it->get<int>() != kSchemaVersion) {
    throw std::invalid_argument("config: unsupported schema_version");
  }
  overlay(j, "eps", c.eps);
  overlay(j, "delta", c.delta);
  overlay(j, "seed", c.seed);
  overlay(j, "C", c.C);
  overlay(j, "C_prime", c.C_prime);
  overlay(j, "C1", c.C1);
  overlay(j, "c_l2", c.c_l2);
  overlay(j, "A_tol", c.A_tol);
  overlay(j, "B", c.B);
  overlay(j, "learner_eps_factor", c.learner_eps_factor);
  overlay(j, "tail_cut", c.tail_cut);
  overlay(j, "sample_scale", c.sample_scale);
  overlay(j, "threads", c.threads);
  if (auto it = j.find("learner"); it != j.end()) {
    for (const auto& [key, value] : it->items()) {
      if (std::find(std::begin(kLearner), std::end(kLearner), key) == std::end(kLearner)) {
        throw std::invalid_argument("config: unknown key 'learner." + key + "'");
      }
    }
    overlay(*it, "A_L", c.learner.A_L);
    overlay(*it, "A_t", c.learner.A_t);
    overlay(*it, "A_s", c.learner.A_s);
    overlay(*it, "A_m", c.learner.A_m);
    overlay(*it, "em_max_iterations", c.learner.em_max_iterations);
    overlay(*it, "em_max_variables", c.learner.em_max_variables);
    overlay(*it, "em_tolerance", c.learner.em_tolerance);
  }
  c.validate();
  return c;
}

TestConfig load_config_file(const std::filesystem::path& path, TestConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return apply_overrides(base, nlohmann::json::parse(in));
}

TestConfig default_config() {
  TestConfig c;
  if (const char* env = std::getenv("PBDTEST_CONFIG"); env != nullptr && *env != '\0') {
    c = load_config_file(env, c);
  }
  return c;
}

}  // namespace pbdtest
