#pragma once

// Completion-time and energy model. Units: ms, MI, MB, W; W x ms = mJ.

#include <span>
#include <string>
#include <vector>

#include "drp/model.hpp"

namespace drp {

struct EnergyPolicy {
  /// Device utilization while it executes the request's function. The
  /// request takes all remaining capacity, so the device runs flat out.
  double execution_utilization = 1.0;
};

struct HopCost {
  enum class Kind { Transmission, Execution };
  Kind kind = Kind::Transmission;
  /// Link id for transmissions, instance id ("F@device") for executions.
  std::string element;
  double latency_ms = 0.0;
  double energy_overall_mj = 0.0;
  double energy_marginal_mj = 0.0;
};

struct PlacementEvaluation {
  double completion_time_ms = 0.0;
  double energy_overall_mj = 0.0;
  double energy_marginal_mj = 0.0;
  std::vector<HopCost> hops;
};

/// Time and energy of one dataflow crossing a path, hop by hop. Link
/// transmissions cost the same under both energy metrics.
struct SegmentCost {
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

double transmission_time(const Topology& topology, const LoadState& load,
                         std::span<const std::size_t> path, const Dataflow& flow);

double execution_time(const EdgeDevice& device, double device_util, const FunctionSpec& function);

double link_energy(const Topology& topology, const LoadState& load,
                   std::span<const std::size_t> path, const Dataflow& flow);

double instance_energy_overall(const EdgeDevice& device, double device_util,
                               const FunctionSpec& function, const EnergyPolicy& policy = {});

/// Equals the overall energy on a previously idle device; otherwise only the
/// dynamic power increment is charged.
double instance_energy_marginal(const EdgeDevice& device, double device_util,
                                const FunctionSpec& function, const EnergyPolicy& policy = {});

/// Both sums accumulate hop by hop in path order.
SegmentCost segment_cost(const Topology& topology, const LoadState& load,
                         std::span<const std::size_t> path, const Dataflow& flow);

/// Everything needed to cost a placement of one request.
struct PlacementProblem {
  const Topology& topology;
  const LoadState& load;
  const ServiceChain& service;
  const DeploymentMap& deployment;
  Request request;
  EnergyPolicy policy{};

  double deadline_ms() const { return request.deadline_ms(service); }
};

/// Walks v_b -> instance 1 -> ... -> instance |F| -> v_e. Saturated elements
/// raise SaturatedLink / SaturatedDevice; an invalid placement raises
/// InvalidPlacement.
PlacementEvaluation evaluate_placement(const PlacementProblem& problem, const Placement& placement);

/// Index-based variant: `devices` holds the host device of each function in
/// chain order. Accumulation order is identical to evaluate_placement.
PlacementEvaluation evaluate_devices(const PlacementProblem& problem,
                                     std::span<const std::size_t> devices, bool with_hops);

}  // namespace drp
