#include "drp/energy.hpp"

#include <fmt/format.h>

#include "drp/errors.hpp"

namespace drp {

namespace {

double hop_latency(const PhysicalLink& link, double link_util, const Dataflow& flow) {
  const double available = (1.0 - link_util) * link.bandwidth_mb_per_ms;
  if (!(available > 0.0)) throw SaturatedLink(link.id);
  return link.prop_delay_ms + flow.size_mb / available;
}

double available_capacity(const EdgeDevice& device, double device_util) {
  const double available = (1.0 - device_util) * device.capacity_mi_per_ms;
  if (!(available > 0.0)) throw SaturatedDevice(device.id);
  return available;
}

}  // namespace

double transmission_time(const Topology& topology, const LoadState& load,
                         std::span<const std::size_t> path, const Dataflow& flow) {
  return segment_cost(topology, load, path, flow).latency_ms;
}

double execution_time(const EdgeDevice& device, double device_util, const FunctionSpec& function) {
  return function.size_mi / available_capacity(device, device_util);
}

double link_energy(const Topology& topology, const LoadState& load,
                   std::span<const std::size_t> path, const Dataflow& flow) {
  return segment_cost(topology, load, path, flow).energy_mj;
}

double instance_energy_overall(const EdgeDevice& device, double device_util,
                               const FunctionSpec& function, const EnergyPolicy& policy) {
  const double duration = execution_time(device, device_util, function);
  const double dynamic = device.profile.dynamic_full_w * policy.execution_utilization;
  return (device.profile.idle_w + dynamic) * duration;
}

double instance_energy_marginal(const EdgeDevice& device, double device_util,
                                const FunctionSpec& function, const EnergyPolicy& policy) {
  if (device_util == 0.0) return instance_energy_overall(device, device_util, function, policy);
  const double duration = execution_time(device, device_util, function);
  const double increment = policy.execution_utilization - device_util;
  return device.profile.dynamic_full_w * increment * duration;
}

SegmentCost segment_cost(const Topology& topology, const LoadState& load,
                         std::span<const std::size_t> path, const Dataflow& flow) {
  SegmentCost cost;
  for (std::size_t li : path) {
    const auto& link = topology.link(li);
    const double latency = hop_latency(link, load.link_util[li], flow);
    cost.latency_ms += latency;
    cost.energy_mj += (link.profile.idle_w + link.profile.dynamic_w) * latency;
  }
  return cost;
}

PlacementEvaluation evaluate_devices(const PlacementProblem& problem,
                                     std::span<const std::size_t> devices, bool with_hops) {
  const auto& topo = problem.topology;
  const auto& service = problem.service;
  const auto& load = problem.load;
  if (devices.size() != service.size())
    throw InvalidPlacement(fmt::format("placement has {} instances for {} functions",
                                       devices.size(), service.size()));

  PlacementEvaluation eval;
  std::size_t here = topo.device_index(problem.request.begin_device);
  const std::size_t end = topo.device_index(problem.request.end_device);

  auto transmit = [&](std::size_t to, const Dataflow& flow) {
    const auto& path = topo.path(here, to).links;
    const auto seg = segment_cost(topo, load, path, flow);
    eval.completion_time_ms += seg.latency_ms;
    eval.energy_overall_mj += seg.energy_mj;
    eval.energy_marginal_mj += seg.energy_mj;
    if (with_hops) {
      for (std::size_t li : path) {
        const auto& link = topo.link(li);
        HopCost hop;
        hop.kind = HopCost::Kind::Transmission;
        hop.element = link.id;
        hop.latency_ms = hop_latency(link, load.link_util[li], flow);
        hop.energy_overall_mj = (link.profile.idle_w + link.profile.dynamic_w) * hop.latency_ms;
        hop.energy_marginal_mj = hop.energy_overall_mj;
        eval.hops.push_back(std::move(hop));
      }
    }
    here = to;
  };

  for (std::size_t i = 0; i < service.size(); ++i) {
    transmit(devices[i], service.dataflows()[i]);
    const auto& device = topo.device(devices[i]);
    const auto& function = service.functions()[i];
    const double u = load.device_util[devices[i]];
    const double latency = execution_time(device, u, function);
    const double overall = instance_energy_overall(device, u, function, problem.policy);
    const double marginal = instance_energy_marginal(device, u, function, problem.policy);
    eval.completion_time_ms += latency;
    eval.energy_overall_mj += overall;
    eval.energy_marginal_mj += marginal;
    if (with_hops) {
      eval.hops.push_back({HopCost::Kind::Execution, function.id + "@" + device.id, latency,
                           overall, marginal});
    }
  }
  transmit(end, service.dataflows().back());
  return eval;
}

PlacementEvaluation evaluate_placement(const PlacementProblem& problem, const Placement& placement) {
  const auto& service = problem.service;
  if (placement.chosen.size() != service.size())
    throw InvalidPlacement(fmt::format("placement has {} instances for {} functions",
                                       placement.chosen.size(), service.size()));
  std::vector<std::size_t> devices;
  devices.reserve(service.size());
  for (std::size_t i = 0; i < service.size(); ++i) {
    const auto& inst = placement.chosen[i];
    if (inst.function != service.functions()[i].id)
      throw InvalidPlacement(fmt::format("position {} holds {} instead of function {}", i + 1,
                                         to_string(inst), service.functions()[i].id));
    bool deployed = false;
    for (const auto& d : problem.deployment.instances) deployed = deployed || d == inst;
    if (!deployed) throw InvalidPlacement(fmt::format("instance {} is not deployed", to_string(inst)));
    auto device = problem.topology.find_device(inst.device);
    if (!device) throw InvalidPlacement(fmt::format("unknown device in {}", to_string(inst)));
    devices.push_back(*device);
  }
  return evaluate_devices(problem, devices, true);
}

}  // namespace drp
