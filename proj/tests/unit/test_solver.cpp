#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>

#include "drp/errors.hpp"
#include "drp/solver.hpp"
#include "fixtures.hpp"

using namespace drp;

namespace {

struct OracleBest {
  bool found = false;
  double energy = 0.0;
  double latency = 0.0;
  Placement placement;
};

// Every combination, ranked by (energy, latency, device ids in chain order).
OracleBest enumerate(const PlacementProblem& problem, Objective objective) {
  std::vector<std::vector<FunctionInstance>> candidates;
  for (const auto& f : problem.service.functions()) {
    std::vector<FunctionInstance> v;
    for (const auto& inst : problem.deployment.instances)
      if (inst.function == f.id) v.push_back(inst);
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.device < b.device; });
    candidates.push_back(v);
  }
  OracleBest best;
  Placement current;
  std::function<void(std::size_t)> rec = [&](std::size_t stage) {
    if (stage == candidates.size()) {
      PlacementEvaluation eval;
      try {
        eval = evaluate_placement(problem, current);
      } catch (const SaturatedDevice&) {
        return;
      } catch (const SaturatedLink&) {
        return;
      }
      if (eval.completion_time_ms > problem.deadline_ms()) return;
      const double e = objective == Objective::OverallEnergy ? eval.energy_overall_mj
                                                             : eval.energy_marginal_mj;
      // Enumeration is already lexicographic, so strict comparisons suffice.
      if (!best.found || e < best.energy || (e == best.energy && eval.completion_time_ms < best.latency))
        best = {true, e, eval.completion_time_ms, current};
      return;
    }
    for (const auto& inst : candidates[stage]) {
      current.chosen.push_back(inst);
      rec(stage + 1);
      current.chosen.pop_back();
    }
  };
  rec(0);
  return best;
}

void check_matches_oracle(const PlacementProblem& problem) {
  for (auto objective : {Objective::OverallEnergy, Objective::MarginalEnergy}) {
    const auto expected = enumerate(problem, objective);
    const auto dp = solve(problem, objective);
    const auto dp_unpruned = solve(problem, objective, {false});
    const auto bf = brute_force(problem, objective);
    REQUIRE(dp.feasible() == expected.found);
    REQUIRE(bf.feasible() == expected.found);
    REQUIRE(dp_unpruned.feasible() == expected.found);
    if (!expected.found) continue;
    CHECK(dp.energy(objective) == expected.energy);
    CHECK(bf.energy(objective) == expected.energy);
    CHECK(dp_unpruned.energy(objective) == expected.energy);
    CHECK(dp.optimal().placement == expected.placement);
    CHECK(bf.optimal().placement == expected.placement);
    CHECK(dp_unpruned.optimal().placement == expected.placement);
    CHECK(dp.optimal().evaluation.completion_time_ms <= problem.deadline_ms());
  }
}

}  // namespace

TEST_CASE("triangle divergence") {
  const test::Triangle t3;
  const auto both = solve_both(t3.problem());
  REQUIRE(both.overall.feasible());
  REQUIRE(both.marginal.feasible());
  CHECK(to_string(both.overall.optimal().placement) == "F1@C");
  CHECK(to_string(both.marginal.optimal().placement) == "F1@B");
  CHECK(both.overall.energy(Objective::OverallEnergy) == doctest::Approx(194.0).epsilon(1e-12));
  CHECK(both.marginal.energy(Objective::MarginalEnergy) == doctest::Approx(70.0).epsilon(1e-12));
  CHECK(both.diverged);
  check_matches_oracle(t3.problem());
}

TEST_CASE("saturated and over-deadline scenarios are infeasible") {
  const auto& p = test::abilene();
  const auto deployment = p.deployment.first_k(p.service, 2);
  const auto full = generate_scenario(p.topology, LoadDistribution::fixed(100),
                                      LoadDistribution::none(), 1);
  const PlacementProblem saturated{p.topology, full, p.service, deployment, p.request()};
  CHECK_FALSE(solve(saturated, Objective::OverallEnergy).feasible());
  CHECK_FALSE(brute_force(saturated, Objective::MarginalEnergy).feasible());

  const auto idle = LoadState::idle(p.topology);
  Request tight = p.request();
  tight.deadline_override_ms = 1.0;
  const PlacementProblem hurried{p.topology, idle, p.service, deployment, tight};
  const auto r = solve(hurried, Objective::OverallEnergy);
  REQUIRE_FALSE(r.feasible());
  CHECK_FALSE(r.infeasible().reason.empty());
  CHECK_THROWS(r.energy(Objective::OverallEnergy));
}

TEST_CASE("homogeneous load gives identical placements") {
  const auto& p = test::abilene();
  for (std::size_t k : {2, 4, 6}) {
    const auto deployment = p.deployment.first_k(p.service, k);
    for (int level = 0; level <= 90; level += 10) {
      const auto load = generate_scenario(p.topology, LoadDistribution::fixed(level),
                                          LoadDistribution::none(), 5);
      const PlacementProblem problem{p.topology, load, p.service, deployment, p.request()};
      const auto both = solve_both(problem);
      CHECK_FALSE(both.diverged);
    }
  }
}

TEST_CASE("single instance per function never diverges") {
  const auto& p = test::abilene();
  const auto deployment = p.deployment.first_k(p.service, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto load = generate_scenario(p.topology, LoadDistribution::normal(60, 30),
                                        LoadDistribution::normal(50, 10), seed);
    const PlacementProblem problem{p.topology, load, p.service, deployment, p.request()};
    const auto both = solve_both(problem);
    CHECK_FALSE(both.diverged);
  }
}

TEST_CASE("dynamic programming agrees with exhaustive enumeration") {
  const auto& p = test::abilene();
  std::uint64_t seed = 1000;
  for (std::size_t k : {2, 4, 6}) {
    const auto deployment = p.deployment.first_k(p.service, k);
    for (auto [mean, sd] : std::vector<std::pair<double, double>>{{50, 10}, {80, 30}, {95, 10}}) {
      for (int run = 0; run < 4; ++run) {
        const auto load = generate_scenario(p.topology, LoadDistribution::normal(mean, sd),
                                            LoadDistribution::normal(50, 20), ++seed);
        Request request = p.request();
        if (run == 3) request.end_device = "seattle";
        const PlacementProblem problem{p.topology, load, p.service, deployment, request};
        check_matches_oracle(problem);
      }
    }
  }
}

TEST_CASE("tight deadlines change the optimum consistently") {
  const auto& p = test::abilene();
  const auto deployment = p.deployment.first_k(p.service, 6);
  const auto load = generate_scenario(p.topology, LoadDistribution::normal(70, 20),
                                      LoadDistribution::normal(50, 10), 77);
  for (double deadline : {20.0, 25.0, 30.0, 40.0, 60.0}) {
    Request request = p.request();
    request.deadline_override_ms = deadline;
    check_matches_oracle({p.topology, load, p.service, deployment, request});
  }
}

TEST_CASE("enumeration bound") {
  const auto& p = test::abilene();
  const auto deployment = p.deployment.first_k(p.service, 2);
  const auto idle = LoadState::idle(p.topology);
  const PlacementProblem problem{p.topology, idle, p.service, deployment, p.request()};
  CHECK(brute_force(problem, Objective::OverallEnergy).labels_explored == 16);
  const auto six = p.deployment.first_k(p.service, 6);
  const PlacementProblem wide{p.topology, idle, p.service, six, p.request()};
  CHECK(brute_force(wide, Objective::OverallEnergy).labels_explored == 1296);
  CHECK_THROWS_AS(brute_force(wide, Objective::OverallEnergy, 1000), EnumerationTooLarge);
}

TEST_CASE("objective names") {
  CHECK(parse_objective("overall") == Objective::OverallEnergy);
  CHECK(parse_objective("marginal") == Objective::MarginalEnergy);
  CHECK(to_string(Objective::MarginalEnergy) == "marginal");
  CHECK_THROWS_AS(parse_objective("fastest"), ConfigError);
}
