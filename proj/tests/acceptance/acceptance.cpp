// Acceptance checks over the shipped campaign. Prints one PASS/FAIL line
// per criterion; exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "drp/errors.hpp"
#include "drp/harness.hpp"
#include "drp/ilp.hpp"
#include "fixtures.hpp"

using namespace drp;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Campaign {
  const test::AbileneSetup& setup = test::abilene();
  CampaignInputs inputs = setup.inputs();
  std::vector<RunInstance> runs = expand_campaign(setup.campaign.groups, setup.campaign.base_seed);
  std::vector<RunRecord> records = run_campaign(inputs, default_parallelism());
  std::map<std::size_t, DeploymentMap> deployments;

  const DeploymentMap& deployment(std::size_t k) {
    auto it = deployments.find(k);
    if (it == deployments.end())
      it = deployments.emplace(k, setup.deployment.first_k(setup.service, k)).first;
    return it->second;
  }
  PlacementProblem problem(const LoadState& load, std::size_t k) {
    return {setup.topology, load, setup.service, deployment(k), setup.request()};
  }
};

// Scenario pairs (overall, marginal) of a group, optionally at one level.
template <typename F>
void for_pairs(const std::vector<RunRecord>& records, int group, F&& f) {
  for (std::size_t i = 0; i + 1 < records.size(); i += 2)
    if (records[i].group_id == group) f(records[i], records[i + 1]);
}

double rel_diff(double a, double b) {
  return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

void oracle_equivalence(Campaign& c) {
  const auto start = Clock::now();
  std::size_t agree = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const auto& r = c.records[i];
    const auto load = scenario_load(c.inputs, r);
    const auto problem = c.problem(load, r.instances_per_function);
    const auto dp = solve(problem, r.objective);
    const auto bf = brute_force(problem, r.objective);
    bool ok = dp.feasible() == bf.feasible() && dp.feasible() == r.feasible;
    if (ok && dp.feasible()) {
      const double d = rel_diff(dp.energy(r.objective), bf.energy(r.objective));
      worst = std::max(worst, d);
      ok = d <= 1e-9;
    }
    agree += ok;
  }
  const double elapsed = seconds_since(start);
  report(1, "oracle equivalence", agree == c.records.size() && elapsed < 120.0,
         fmt::format("{}/{} instances agree with exhaustive enumeration, max relative difference {:g}, "
                     "{:.2f} s",
                     agree, c.records.size(), worst, elapsed));
}

void ilp_fidelity(Campaign& c) {
  std::mt19937_64 rng(2024);
  std::size_t valid = 0, tried = 0, objective_ok = 0, optima = 0, optima_ok = 0;
  std::size_t mutations = 0, caught = 0;
  std::size_t scenario = 0;
  while ((valid < 200 || mutations < 200) && scenario < c.records.size() / 2) {
    const auto& r = c.records[2 * (rng() % (c.records.size() / 2))];
    ++scenario;
    const auto load = scenario_load(c.inputs, r);
    const auto problem = c.problem(load, r.instances_per_function);
    const auto objective = rng() % 2 ? Objective::MarginalEnergy : Objective::OverallEnergy;
    const auto m = build_model(problem, objective);

    // Random placement; kept when it meets the deadline on unsaturated elements.
    Placement placement;
    for (const auto& f : c.setup.service.functions()) {
      std::vector<FunctionInstance> options;
      for (const auto& inst : problem.deployment.instances)
        if (inst.function == f.id) options.push_back(inst);
      placement.chosen.push_back(options[rng() % options.size()]);
    }
    PlacementEvaluation eval;
    try {
      eval = evaluate_placement(problem, placement);
    } catch (const Error&) {
      continue;
    }
    if (eval.completion_time_ms > problem.deadline_ms() || valid >= 200) continue;
    ++tried;
    const auto a = encode_placement(m, placement);
    if (validate_assignment(m, a).empty()) ++valid;
    const double expected =
        objective == Objective::OverallEnergy ? eval.energy_overall_mj : eval.energy_marginal_mj;
    if (rel_diff(m.objective_value(a.values), expected) <= 1e-9) ++objective_ok;

    // Encoded optimum.
    const auto best = solve(problem, objective);
    if (best.feasible()) {
      const auto opt = encode_placement(m, best.optimal().placement);
      const bool ok = validate_assignment(m, opt).empty() &&
                      rel_diff(m.objective_value(opt.values), best.energy(objective)) <= 1e-9;
      ++optima;
      optima_ok += ok;

      // One single-variable mutation of the encoded optimum.
      if (mutations < 200) {
        std::map<std::size_t, std::set<std::string>> touching;
        const auto var = static_cast<std::size_t>(rng() % m.variable_count());
        for (const auto& con : m.constraints())
          for (const auto& t : con.terms)
            if (t.var == var && t.coef != 0.0) touching[var].insert(constraint_family(con.name));
        auto mutated = opt;
        if (m.kind(var) == VarKind::O) {
          std::int64_t v;
          do v = static_cast<std::int64_t>(rng() % (m.beta() + 3)) - 1;
          while (v == opt.values[var]);
          mutated.values[var] = v;
        } else {
          mutated.values[var] = 1 - mutated.values[var];
        }
        const bool out_of_domain = mutated.values[var] < 0 || mutated.values[var] > m.upper_bound(var);
        const std::string domain = m.kind(var) == VarKind::X ? "c21" : m.kind(var) == VarKind::Y ? "c22" : "c23";
        const auto violated = validate_assignment(m, mutated);
        bool ok = !violated.empty();
        for (const auto& name : violated) {
          const auto fam = constraint_family(name);
          if (fam == domain ? !out_of_domain : touching[var].count(fam) == 0) ok = false;
        }
        ++mutations;
        caught += ok;
      }
    }
  }
  const bool ok = valid == 200 && tried == 200 && objective_ok == 200 && mutations == 200 &&
                  caught == 200 && optima > 0 && optima_ok == optima;
  report(2, "ILP fidelity", ok,
         fmt::format("{}/{} random feasible placements validate, {}/{} objectives match, "
                     "{}/{} encoded optima match, {}/{} mutations caught by the mutated variable's families",
                     valid, tried, objective_ok, tried, optima_ok, optima, caught, mutations));
}

void cross_dominance(Campaign& c) {
  std::size_t checked = 0, holds = 0;
  for (std::size_t i = 0; i < c.records.size(); i += 2) {
    const auto& o = c.records[i];
    const auto& m = c.records[i + 1];
    if (!o.feasible || !m.feasible) continue;
    ++checked;
    holds += o.energy_overall_mj <= m.energy_overall_mj && m.energy_marginal_mj <= o.energy_marginal_mj;
  }
  double eo_o = 0, eo_m = 0, em_o = 0, em_m = 0;
  std::size_t n = 0, diverged = 0;
  for_pairs(c.records, 1, [&](const RunRecord& o, const RunRecord& m) {
    if (!o.feasible || !m.feasible) return;
    ++n;
    diverged += o.diverged;
    eo_o += o.energy_overall_mj;
    eo_m += m.energy_overall_mj;
    em_o += o.energy_marginal_mj;
    em_m += m.energy_marginal_mj;
  });
  const bool means = n > 0 && eo_o <= eo_m && em_m <= em_o;
  report(3, "cross-dominance", checked > 0 && holds == checked && means,
         fmt::format("{}/{} feasible scenario pairs; baseline means E_O {:.1f} <= {:.1f}, "
                     "E_M {:.1f} <= {:.1f} ({} of {} baseline runs diverge)",
                     holds, checked, eo_o / n, eo_m / n, em_m / n, em_o / n, diverged, n));
}

void homogeneity(Campaign& c) {
  std::map<int, std::vector<const RunRecord*>> by_level;
  for (const auto& r : c.records)
    if (r.group_id == 3) by_level[*r.load_level].push_back(&r);
  bool ok = by_level.size() == 11;
  std::size_t zero_spread = 0, levels = 0, diverged = 0, infeasible_100 = 0;
  for (const auto& [level, rows] : by_level) {
    if (level == 100) {
      for (const auto* r : rows) infeasible_100 += !r->feasible;
      continue;
    }
    ++levels;
    std::vector<RunRecord> records;
    for (const auto* r : rows) {
      records.push_back(*r);
      diverged += r->diverged;
    }
    bool flat = true;
    for (const auto& row : summarize(records, {GroupKey::Objective})) {
      flat = flat && row.feasible == row.runs && row.completion_time_ms->stddev == 0.0 &&
             row.energy_overall_mj->stddev == 0.0 && row.energy_marginal_mj->stddev == 0.0;
    }
    zero_spread += flat;
  }
  ok = ok && zero_spread == levels && diverged == 0 && infeasible_100 == by_level[100].size();
  report(4, "homogeneity identity", ok,
         fmt::format("fixed load: {}/{} levels 0-90 with zero stddev, {} diverged runs, level 100 "
                     "infeasible in {}/{} runs",
                     zero_spread, levels, diverged, infeasible_100, by_level[100].size()));
}

// Divergence rate per load level, averaged over the levels of a group.
double divergence_rate(const std::vector<RunRecord>& records, int group) {
  std::map<int, std::pair<std::size_t, std::size_t>> per_level;
  for_pairs(records, group, [&](const RunRecord& o, const RunRecord&) {
    auto& [div, runs] = per_level[o.load_level.value_or(-1)];
    div += o.diverged;
    ++runs;
  });
  double sum = 0.0;
  for (const auto& [level, counts] : per_level)
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  return per_level.empty() ? 0.0 : sum / static_cast<double>(per_level.size());
}

void heterogeneity(Campaign& c) {
  const double fixed = divergence_rate(c.records, 3);
  const double sd10 = divergence_rate(c.records, 2);
  const double sd30 = divergence_rate(c.records, 4);
  report(5, "heterogeneity monotonicity", fixed == 0.0 && fixed <= sd10 && sd10 <= sd30 && sd30 > 0.0,
         fmt::format("mean divergence rate sigma=0: {:.3f}, sigma=10: {:.3f}, sigma=30: {:.3f}", fixed,
                     sd10, sd30));
}

void instance_availability(Campaign& c) {
  const double k2 = divergence_rate(c.records, 2);
  const double k4 = divergence_rate(c.records, 5);
  const double k6 = divergence_rate(c.records, 6);

  // Same level-100 scenarios solved with two and with four instances.
  std::size_t paired = 0, rescued = 0;
  for_pairs(c.records, 2, [&](const RunRecord& o, const RunRecord&) {
    if (o.load_level != 100 || o.feasible) return;
    ++paired;
    const auto load = scenario_load(c.inputs, o);
    rescued += solve(c.problem(load, 4), Objective::OverallEnergy).feasible();
  });
  std::size_t k2_infeasible = 0, k4_feasible = 0;
  for_pairs(c.records, 2, [&](const RunRecord& o, const RunRecord&) {
    k2_infeasible += o.load_level == 100 && !o.feasible;
  });
  for_pairs(c.records, 5, [&](const RunRecord& o, const RunRecord&) {
    k4_feasible += o.load_level == 100 && o.feasible;
  });
  report(6, "instance-availability effect",
         k2 <= k4 && k4 <= k6 && rescued > 0 && k2_infeasible > 0 && k4_feasible > 0,
         fmt::format("mean divergence rate k=2: {:.3f}, k=4: {:.3f}, k=6: {:.3f}; at level 100, "
                     "{} k=2 scenarios infeasible, {} of them feasible with 4 instances; "
                     "campaign k=4 feasible in {}/25",
                     k2, k4, k6, k2_infeasible, rescued, k4_feasible));
}

void marginal_invariance(Campaign& c) {
  double worst = 0.0;
  std::size_t cases = 0;
  for (const auto& dev : c.setup.topology.devices()) {
    for (const auto& fn : c.setup.service.functions()) {
      const double reference = instance_energy_marginal(dev, 0.1, fn);
      for (int i = 1; i <= 9; ++i) {
        worst = std::max(worst, std::abs(instance_energy_marginal(dev, i / 10.0, fn) - reference));
        ++cases;
      }
    }
  }
  report(7, "marginal-metric invariance", worst <= 1e-9,
         fmt::format("max deviation {:g} mJ over {} (device, function, u) cases, u = 0.1..0.9", worst,
                     cases));
}

std::size_t instances_of(const Campaign& c, int group) {
  for (const auto& g : c.setup.campaign.groups)
    if (g.group_id == group) return g.instances_per_function;
  return 0;
}

void completion_tradeoff(Campaign& c) {
  bool ok = true;
  std::string detail;
  for (int group : {5, 6}) {
    double sum_o = 0, sum_m = 0;
    std::size_t n = 0;
    for_pairs(c.records, group, [&](const RunRecord& o, const RunRecord& m) {
      if (o.load_level.value_or(0) < 60 || !o.diverged || !o.feasible || !m.feasible) return;
      sum_o += o.completion_time_ms;
      sum_m += m.completion_time_ms;
      ++n;
    });
    const bool holds = n > 0 && sum_o / n >= sum_m / n;
    ok = ok && holds;
    detail += fmt::format("{}k={}: {} diverged pairs, overall {:.2f} ms vs marginal {:.2f} ms",
                          detail.empty() ? "" : "; ", instances_of(c, group),
                          n, n ? sum_o / n : 0.0, n ? sum_m / n : 0.0);
  }
  report(8, "completion-time trade-off", ok, detail);
}

void determinism(Campaign& c) {
  auto text = [](const std::vector<RunRecord>& records) {
    std::ostringstream out;
    write_records_csv(records, out, {false});
    return out.str();
  };
  const auto first = text(c.records);
  const auto serial = text(run_campaign(c.inputs, 1));
  const auto parallel = text(run_campaign(c.inputs, 4));
  report(9, "determinism", first == serial && serial == parallel,
         fmt::format("{} bytes of records identical across runs with 1, 4 and {} workers",
                     first.size(), default_parallelism()));
}

void solver_performance(Campaign& c) {
  std::vector<double> times;
  for (const auto& r : c.records) {
    if (r.instances_per_function != 6) continue;
    const auto load = scenario_load(c.inputs, r);
    const auto problem = c.problem(load, 6);
    const auto start = Clock::now();
    (void)solve(problem, r.objective);
    times.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  const double p99 = times.empty() ? 0.0 : nearest_rank(times, 99);
  report(10, "solver performance", !times.empty() && p99 < 10.0,
         fmt::format("p99 solve time {:.4f} ms over {} k=6 requests (max {:.4f} ms)", p99,
                     times.size(), times.empty() ? 0.0 : times.back()));
}

}  // namespace

int main() {
  try {
    Campaign campaign;
    std::printf("campaign: %zu run instances\n", campaign.records.size());
    oracle_equivalence(campaign);
    ilp_fidelity(campaign);
    cross_dominance(campaign);
    homogeneity(campaign);
    heterogeneity(campaign);
    instance_availability(campaign);
    marginal_invariance(campaign);
    completion_tradeoff(campaign);
    determinism(campaign);
    solver_performance(campaign);
  } catch (const std::exception& e) {
    std::printf("FAIL    acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
