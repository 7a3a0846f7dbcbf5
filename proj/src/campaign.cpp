#include "drp/harness.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "drp/errors.hpp"

namespace drp {

std::size_t default_parallelism() {
  if (const char* env = std::getenv("DRP_JOBS")) {
    char* end = nullptr;
    const long jobs = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && jobs > 0) return static_cast<std::size_t>(jobs);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

RunRecord make_record(const RunInstance& run, const SolveResult& result) {
  RunRecord r;
  r.group_id = run.group_id;
  r.group_name = run.group_name;
  r.load_level = run.load_level;
  r.instances_per_function = run.instances_per_function;
  r.run_index = run.run_index;
  r.seed = run.seed;
  r.objective = run.objective;
  r.feasible = result.feasible();
  r.solver_time_ms = result.solver_time_ms;
  if (r.feasible) {
    const auto& opt = result.optimal();
    r.completion_time_ms = opt.evaluation.completion_time_ms;
    r.energy_overall_mj = opt.evaluation.energy_overall_mj;
    r.energy_marginal_mj = opt.evaluation.energy_marginal_mj;
    for (const auto& inst : opt.placement.chosen) r.placement.push_back(to_string(inst));
  }
  return r;
}

}  // namespace

LoadState scenario_load(const CampaignInputs& inputs, const RunRecord& record) {
  for (const auto& g : inputs.campaign.groups) {
    if (g.group_id != record.group_id) continue;
    const auto device_load = record.load_level ? g.device_load.at_level(*record.load_level)
                                               : g.device_load;
    return generate_scenario(inputs.topology, device_load, g.link_load, record.seed);
  }
  throw ConfigError(fmt::format("record refers to unknown group {}", record.group_id));
}

std::vector<RunRecord> run_campaign(const CampaignInputs& inputs, std::size_t parallelism) {
  const auto runs = expand_campaign(inputs.campaign.groups, inputs.campaign.base_seed);
  const auto& topo = inputs.topology;
  const auto& service = inputs.service;
  if (!topo.find_device(inputs.campaign.begin_device) || !topo.find_device(inputs.campaign.end_device))
    throw ConfigError("campaign request references an unknown device");

  // Deployments per instance count, checked before any solving.
  std::map<std::size_t, DeploymentMap> deployments;
  for (const auto& g : inputs.campaign.groups) {
    if (deployments.count(g.instances_per_function)) continue;
    auto d = inputs.deployment.first_k(service, g.instances_per_function);
    (void)ResolvedDeployment::resolve(topo, service, d);
    std::map<std::string, std::size_t> per_function;
    for (const auto& inst : d.instances) ++per_function[inst.function];
    for (const auto& f : service.functions())
      if (per_function[f.id] < g.instances_per_function)
        throw ConfigError(fmt::format("deployment has fewer than {} instances of {}",
                                      g.instances_per_function, f.id));
    deployments.emplace(g.instances_per_function, std::move(d));
  }

  Request request;
  request.begin_device = inputs.campaign.begin_device;
  request.end_device = inputs.campaign.end_device;

  // Expansion emits (Overall, Marginal) pairs per scenario.
  const std::size_t scenarios = runs.size() / 2;
  std::vector<RunRecord> records(runs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t s = next.fetch_add(1);
      if (s >= scenarios) return;
      try {
        const auto& run = runs[2 * s];
        const auto load = generate_scenario(topo, run.device_load, run.link_load, run.seed);
        PlacementProblem problem{topo, load, service, deployments.at(run.instances_per_function),
                                 request};
        const auto overall = solve(problem, Objective::OverallEnergy);
        const auto marginal = solve(problem, Objective::MarginalEnergy);
        auto a = make_record(runs[2 * s], overall);
        auto b = make_record(runs[2 * s + 1], marginal);
        const bool diverged = a.feasible != b.feasible || a.placement != b.placement;
        a.diverged = b.diverged = diverged;
        records[2 * s] = std::move(a);
        records[2 * s + 1] = std::move(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(scenarios);
        return;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(parallelism, scenarios));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace drp
