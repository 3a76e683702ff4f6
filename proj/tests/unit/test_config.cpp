#include <random>

#include <doctest.h>

#include "cid/config.hpp"
#include "cid/error.hpp"

using namespace cid;

namespace {

std::string where_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.where();
  }
  return "";
}

CidConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> small(1, 50);
  CidConfig c;
  auto lo = c.design_space.lower.to_array();
  auto hi = c.design_space.upper.to_array();
  for (std::size_t j = 0; j < lo.size(); ++j) {
    const double span = hi[j] - lo[j];
    const double a = lo[j] + span * u(rng) * 0.5;
    const double b = a + (hi[j] - a) * u(rng);
    lo[j] = a;
    hi[j] = b;
  }
  c.design_space.lower = button::ButtonDesignParams::from_array(lo);
  c.design_space.upper = button::ButtonDesignParams::from_array(hi);
  c.objectives.kinds = {ObjectiveKind::kEffort, ObjectiveKind::kCompletionTime};
  c.optimizer.initial_designs = small(rng) + 1;
  c.optimizer.scan_count = 16 * small(rng);
  c.optimizer.mc_samples = small(rng);
  c.optimizer.reference_margin = u(rng);
  c.optimizer.reference = {1.0 + u(rng), 0.1 * u(rng)};
  c.optimizer.kernel = gp::KernelFamily::kSquaredExponential;
  c.user_model.meta_lr = 1e-3 * (1.0 + u(rng));
  c.user_model.inner_lr = 0.1 * u(rng) + 1e-6;
  c.user_model.gamma = 0.9 + 0.09 * u(rng);
  c.user_model.hidden = {small(rng), small(rng), small(rng)};
  c.simulator.mass_kg = 0.001 + 0.01 * u(rng);
  c.run.budget = small(rng);
  c.run.seed = rng();
  return c;
}

}  // namespace

TEST_CASE("empty document gives the defaults") {
  const auto c = parse_config("");
  CHECK(c == CidConfig{});
  CHECK(c.run.budget == 40);
  CHECK(c.optimizer.initial_designs == 8);
  CHECK(c.objective_count() == 3);
}

TEST_CASE("values are read from their sections") {
  const auto c = parse_config(
      "# comment\n"
      "[run]\n"
      "budget = 12\n"
      "seed = 99\n"
      "[objectives]\n"
      "provider = synthetic\n"
      "problem = zdt1\n"
      "problem_dim = 4\n"
      "[design_space]\n"
      "travel_min = 1.5\n");
  CHECK(c.run.budget == 12);
  CHECK(c.run.seed == 99);
  CHECK(c.objectives.provider == ProviderKind::kSynthetic);
  CHECK(c.objectives.problem == problems::ProblemId::kZdt1);
  CHECK(c.objectives.problem_dim == 4);
  CHECK(c.design_space.lower.travel == 1.5);
  CHECK(c.objective_count() == 2);
}

TEST_CASE("errors name their location") {
  CHECK(where_of("[run]\nbudget = 0\n") == "run.budget");
  CHECK(where_of("[run]\nbudget = many\n") == "run.budget");
  CHECK(where_of("[run]\nbudgets = 3\n") == "run.budgets");
  CHECK(where_of("[nowhere]\nx = 1\n") == "nowhere");
  CHECK(where_of("[optimizer]\nkernel = cubic\n") == "optimizer.kernel");
  CHECK(where_of("[design_space]\ntravel_min = 4\ntravel_max = 3\n") == "design_space.travel_min");
  CHECK(where_of("[user_model]\ngamma = 1.5\n") == "user_model.gamma");
  CHECK(where_of("[run\nbudget = 3\n").rfind("line", 0) == 0);
}

TEST_CASE("serialize then parse is lossless") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto c = random_config(rng);
    REQUIRE_NOTHROW(c.validate());
    const auto text = serialize_config(c);
    CHECK(parse_config(text) == c);
    CHECK(serialize_config(parse_config(text)) == text);
  }
}

TEST_CASE("fingerprint follows the content") {
  CidConfig a, b;
  CHECK(config_fingerprint(a) == config_fingerprint(b));
  b.run.seed = 2;
  CHECK(config_fingerprint(a) != config_fingerprint(b));
  CHECK(config_fingerprint(parse_config(serialize_config(b))) == config_fingerprint(b));
}
