#include "drp/solver.hpp"

#include <chrono>
#include <limits>

#include <fmt/format.h>

#include "drp/errors.hpp"

namespace drp {

std::string to_string(Objective objective) {
  return objective == Objective::OverallEnergy ? "overall" : "marginal";
}

Objective parse_objective(const std::string& text) {
  if (text == "overall") return Objective::OverallEnergy;
  if (text == "marginal") return Objective::MarginalEnergy;
  throw ConfigError(fmt::format("unknown objective '{}'", text));
}

double SolveResult::energy(Objective objective) const {
  const auto& eval = optimal().evaluation;
  return objective == Objective::OverallEnergy ? eval.energy_overall_mj : eval.energy_marginal_mj;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Per-instance execution cost, or nullopt for saturated hosts.
struct InstanceCost {
  bool usable = false;
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

InstanceCost instance_cost(const PlacementProblem& problem, std::size_t device,
                           std::size_t function, Objective objective) {
  const auto& dev = problem.topology.device(device);
  const auto& fn = problem.service.functions()[function];
  const double u = problem.load.device_util[device];
  try {
    InstanceCost c;
    c.latency_ms = execution_time(dev, u, fn);
    c.energy_mj = objective == Objective::OverallEnergy
                      ? instance_energy_overall(dev, u, fn, problem.policy)
                      : instance_energy_marginal(dev, u, fn, problem.policy);
    c.usable = true;
    return c;
  } catch (const SaturatedDevice&) {
    return {};
  }
}

struct Label {
  double energy;
  double latency;
  std::uint32_t parent;  // index into the label pool, kNoParent at v_b
  std::uint32_t instance;  // position in the resolved deployment
};

constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

// Lexicographic comparison of the instance sequences ending at two labels of
// the same layer.
int compare_sequences(const std::vector<Label>& pool, std::uint32_t a, std::uint32_t b) {
  std::vector<std::uint32_t> sa, sb;
  for (; a != kNoParent; a = pool[a].parent) sa.push_back(pool[a].instance);
  for (; b != kNoParent; b = pool[b].parent) sb.push_back(pool[b].instance);
  for (std::size_t i = sa.size(), j = sb.size(); i > 0 && j > 0; --i, --j) {
    if (sa[i - 1] != sb[j - 1]) return sa[i - 1] < sb[j - 1] ? -1 : 1;
  }
  return 0;
}

// Total order used for the final choice and for breaking exact ties.
bool preferred(const std::vector<Label>& pool, std::uint32_t a, std::uint32_t b) {
  const auto& la = pool[a];
  const auto& lb = pool[b];
  if (la.energy != lb.energy) return la.energy < lb.energy;
  if (la.latency != lb.latency) return la.latency < lb.latency;
  return compare_sequences(pool, a, b) < 0;
}

bool dominates(const std::vector<Label>& pool, std::uint32_t a, std::uint32_t b) {
  const auto& la = pool[a];
  const auto& lb = pool[b];
  if (la.energy > lb.energy || la.latency > lb.latency) return false;
  return la.energy < lb.energy || la.latency < lb.latency || compare_sequences(pool, a, b) <= 0;
}

// Inserts `candidate` into a node's Pareto front. Returns false if dominated.
bool insert_label(const std::vector<Label>& pool, std::vector<std::uint32_t>& front,
                  std::uint32_t candidate, bool prune) {
  if (!prune) {
    front.push_back(candidate);
    return true;
  }
  for (std::uint32_t existing : front)
    if (dominates(pool, existing, candidate)) return false;
  std::erase_if(front, [&](std::uint32_t existing) { return dominates(pool, candidate, existing); });
  front.push_back(candidate);
  return true;
}

SolveResult make_optimal(const PlacementProblem& problem, const ResolvedDeployment& resolved,
                         const std::vector<std::size_t>& instances) {
  Placement placement;
  std::vector<std::size_t> devices;
  for (std::size_t idx : instances) {
    const auto& inst = resolved.instances[idx];
    placement.chosen.push_back({problem.topology.device(inst.device).id,
                                problem.service.functions()[inst.function].id});
    devices.push_back(inst.device);
  }
  SolveResult result;
  result.outcome = Optimal{std::move(placement), evaluate_devices(problem, devices, true)};
  return result;
}

}  // namespace

SolveResult solve(const PlacementProblem& problem, Objective objective,
                  const SolverOptions& options) {
  const auto start = Clock::now();
  const auto& topo = problem.topology;
  const auto& service = problem.service;
  const auto resolved = ResolvedDeployment::resolve(topo, service, problem.deployment);
  const double deadline = problem.deadline_ms();
  const std::size_t begin = topo.device_index(problem.request.begin_device);
  const std::size_t end = topo.device_index(problem.request.end_device);
  const std::size_t stages = service.size();

  std::vector<InstanceCost> costs(resolved.instances.size());
  for (std::size_t i = 0; i < resolved.instances.size(); ++i)
    costs[i] = instance_cost(problem, resolved.instances[i].device,
                             resolved.instances[i].function, objective);

  std::vector<Label> pool;
  pool.push_back({0.0, 0.0, kNoParent, 0});
  // fronts[i] holds the Pareto front at each instance of function i.
  std::vector<std::uint32_t> previous = {0};
  std::vector<std::size_t> previous_devices = {begin};
  std::uint64_t explored = 1;
  bool saw_saturation = false;

  auto extend = [&](std::uint32_t from, std::size_t from_device, std::size_t to_device,
                    const Dataflow& flow) -> std::optional<Label> {
    SegmentCost seg;
    try {
      seg = segment_cost(topo, problem.load, topo.path(from_device, to_device).links, flow);
    } catch (const SaturatedLink&) {
      saw_saturation = true;
      return std::nullopt;
    }
    return Label{pool[from].energy + seg.energy_mj, pool[from].latency + seg.latency_ms, from, 0};
  };

  // Device of the node a label sits at.
  auto device_of = [&](std::uint32_t label, std::size_t layer) {
    return layer == 0 ? begin : resolved.instances[pool[label].instance].device;
  };

  std::vector<std::uint32_t> current;
  for (std::size_t layer = 1; layer <= stages; ++layer) {
    const std::size_t f = layer - 1;
    const auto& flow = service.dataflows()[f];
    current.clear();
    for (std::size_t inst : resolved.by_function[f]) {
      if (!costs[inst].usable) {
        saw_saturation = true;
        continue;
      }
      const std::size_t to_device = resolved.instances[inst].device;
      std::vector<std::uint32_t> front;
      for (std::uint32_t from : previous) {
        auto next = extend(from, device_of(from, layer - 1), to_device, flow);
        if (!next) continue;
        next->energy += costs[inst].energy_mj;
        next->latency += costs[inst].latency_ms;
        next->instance = static_cast<std::uint32_t>(inst);
        ++explored;
        if (next->latency > deadline) continue;
        pool.push_back(*next);
        if (!insert_label(pool, front, static_cast<std::uint32_t>(pool.size() - 1),
                          options.dominance_pruning))
          pool.pop_back();
      }
      current.insert(current.end(), front.begin(), front.end());
    }
    previous.swap(current);
    if (previous.empty()) break;
  }

  std::optional<std::uint32_t> best;
  if (!previous.empty()) {
    const auto& flow = service.dataflows().back();
    for (std::uint32_t from : previous) {
      auto last = extend(from, device_of(from, stages), end, flow);
      if (!last) continue;
      ++explored;
      if (last->latency > deadline) continue;
      last->instance = pool[from].instance;
      // The closing label inherits the parent's sequence.
      last->parent = pool[from].parent;
      pool.push_back(*last);
      const auto idx = static_cast<std::uint32_t>(pool.size() - 1);
      if (!best || preferred(pool, idx, *best)) best = idx;
    }
  }

  SolveResult result;
  if (!best) {
    result.outcome = Infeasible{saw_saturation
                                    ? "no placement meets the deadline using unsaturated elements"
                                    : "no placement meets the deadline"};
  } else {
    std::vector<std::size_t> chosen(stages);
    std::uint32_t at = *best;
    for (std::size_t i = stages; i > 0; --i) {
      chosen[i - 1] = pool[at].instance;
      at = pool[at].parent;
    }
    result = make_optimal(problem, resolved, chosen);
  }
  result.labels_explored = explored;
  result.solver_time_ms = elapsed_ms(start);
  return result;
}

SolveResult brute_force(const PlacementProblem& problem, Objective objective,
                        std::uint64_t bound) {
  const auto start = Clock::now();
  const auto resolved = ResolvedDeployment::resolve(problem.topology, problem.service,
                                                    problem.deployment);
  const std::size_t stages = problem.service.size();
  std::uint64_t total = 1;
  for (const auto& group : resolved.by_function) {
    total *= group.size();
    if (total > bound)
      throw EnumerationTooLarge(fmt::format("more than {} candidate placements", bound));
  }

  const double deadline = problem.deadline_ms();
  std::vector<std::size_t> digits(stages, 0);
  std::vector<std::size_t> devices(stages);
  std::vector<std::size_t> best_instances;
  double best_energy = 0.0;
  double best_latency = 0.0;
  std::uint64_t enumerated = 0;

  // Odometer in lexicographic order; strict improvement keeps the first
  // (lexicographically smallest) among exact ties.
  while (true) {
    ++enumerated;
    for (std::size_t i = 0; i < stages; ++i)
      devices[i] = resolved.instances[resolved.by_function[i][digits[i]]].device;
    try {
      const auto eval = evaluate_devices(problem, devices, false);
      const double energy = objective == Objective::OverallEnergy ? eval.energy_overall_mj
                                                                  : eval.energy_marginal_mj;
      if (eval.completion_time_ms <= deadline &&
          (best_instances.empty() || energy < best_energy ||
           (energy == best_energy && eval.completion_time_ms < best_latency))) {
        best_energy = energy;
        best_latency = eval.completion_time_ms;
        best_instances.clear();
        for (std::size_t i = 0; i < stages; ++i)
          best_instances.push_back(resolved.by_function[i][digits[i]]);
      }
    } catch (const SaturatedDevice&) {
    } catch (const SaturatedLink&) {
    }
    bool wrapped = true;
    for (std::size_t pos = stages; pos > 0 && wrapped; --pos) {
      if (++digits[pos - 1] < resolved.by_function[pos - 1].size())
        wrapped = false;
      else
        digits[pos - 1] = 0;
    }
    if (wrapped) break;
  }

  SolveResult result;
  if (best_instances.empty())
    result.outcome = Infeasible{"no enumerated placement meets the deadline"};
  else
    result = make_optimal(problem, resolved, best_instances);
  result.labels_explored = enumerated;
  result.solver_time_ms = elapsed_ms(start);
  return result;
}

BothObjectives solve_both(const PlacementProblem& problem, const SolverOptions& options) {
  BothObjectives out{solve(problem, Objective::OverallEnergy, options),
                     solve(problem, Objective::MarginalEnergy, options), false};
  if (out.overall.feasible() && out.marginal.feasible())
    out.diverged = !(out.overall.optimal().placement == out.marginal.optimal().placement);
  else
    out.diverged = out.overall.feasible() != out.marginal.feasible();
  return out;
}

}  // namespace drp
