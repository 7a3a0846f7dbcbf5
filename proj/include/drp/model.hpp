#pragma once

// Domain model of an orchestration area: edge devices, physical links,
// service chains, deployed function instances and placement requests.

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace drp {

struct DeviceEnergyProfile {
  double idle_w = 0.0;
  /// Increment from idle to full utilization.
  double dynamic_full_w = 0.0;
};

struct LinkEnergyProfile {
  double idle_w = 0.0;
  double dynamic_w = 0.0;
};

struct EdgeDevice {
  std::string id;
  double capacity_mi_per_ms = 0.0;
  DeviceEnergyProfile profile;
};

/// Directed physical link.
struct PhysicalLink {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double prop_delay_ms = 0.0;
  double bandwidth_mb_per_ms = 0.0;
  LinkEnergyProfile profile;
};

struct Path {
  std::vector<std::size_t> links;
  double delay_ms = 0.0;
};

/// Immutable directed graph with an all-pairs shortest-path table over the
/// propagation-delay metric. Devices and links are addressed by index;
/// string ids are kept for I/O.
class Topology {
 public:
  Topology(std::vector<EdgeDevice> devices, std::vector<PhysicalLink> links);

  const std::vector<EdgeDevice>& devices() const { return devices_; }
  const std::vector<PhysicalLink>& links() const { return links_; }
  std::size_t device_count() const { return devices_.size(); }
  std::size_t link_count() const { return links_.size(); }

  const EdgeDevice& device(std::size_t index) const { return devices_.at(index); }
  const PhysicalLink& link(std::size_t index) const { return links_.at(index); }

  std::optional<std::size_t> find_device(const std::string& id) const;
  std::optional<std::size_t> find_link(const std::string& id) const;
  std::size_t device_index(const std::string& id) const;
  std::size_t link_index(const std::string& id) const;

  const Path& path(std::size_t from, std::size_t to) const {
    return path_table_[from * devices_.size() + to];
  }

 private:
  void build_path_table();

  std::vector<EdgeDevice> devices_;
  std::vector<PhysicalLink> links_;
  std::unordered_map<std::string, std::size_t> device_by_id_;
  std::unordered_map<std::string, std::size_t> link_by_id_;
  std::vector<Path> path_table_;
};

/// Utilization snapshot, indexed like the topology. Values lie in [0,1].
struct LoadState {
  std::vector<double> device_util;
  std::vector<double> link_util;

  static LoadState idle(const Topology& topology);
  bool operator==(const LoadState&) const = default;
};

struct FunctionSpec {
  std::string id;
  double size_mi = 0.0;
  /// 1-based position in the chain.
  int order = 0;
};

struct Dataflow {
  double size_mb = 0.0;
  /// Flow i leaves stage i and enters stage i+1; stage 0 is the beginning
  /// device and stage |F|+1 the end device.
  std::size_t index = 0;
};

class ServiceChain {
 public:
  /// Functions may be given in any order; they are sorted by `order`.
  ServiceChain(std::vector<FunctionSpec> functions, std::vector<Dataflow> dataflows,
               double deadline_ms);

  const std::vector<FunctionSpec>& functions() const { return functions_; }
  const std::vector<Dataflow>& dataflows() const { return dataflows_; }
  double deadline_ms() const { return deadline_ms_; }
  std::size_t size() const { return functions_.size(); }

  std::optional<std::size_t> find_function(const std::string& id) const;
  std::size_t function_index(const std::string& id) const;

 private:
  std::vector<FunctionSpec> functions_;
  std::vector<Dataflow> dataflows_;
  double deadline_ms_;
};

/// The pair (device, function) naming a deployed function instance.
struct FunctionInstance {
  std::string device;
  std::string function;

  bool operator==(const FunctionInstance&) const = default;
  auto operator<=>(const FunctionInstance&) const = default;
};

/// Deployed instances as declared. May be invalid; see validate_deployment.
struct DeploymentMap {
  std::vector<FunctionInstance> instances;

  /// Keeps, for each function, the first `per_function` instances in
  /// declaration order.
  DeploymentMap first_k(const ServiceChain& service, std::size_t per_function) const;
};

struct DeploymentViolation {
  enum class Kind { EmptyFunction, DuplicateInstance, UnknownDevice, UnknownFunction };
  Kind kind;
  std::string message;
};

std::vector<DeploymentViolation> validate_deployment(const Topology& topology,
                                                     const ServiceChain& service,
                                                     const DeploymentMap& deployment);

/// Deployment resolved to indices. Instances of each function are sorted by
/// device id so that index order coincides with id order.
struct ResolvedDeployment {
  struct Instance {
    std::size_t device;
    std::size_t function;
  };
  std::vector<Instance> instances;
  std::vector<std::vector<std::size_t>> by_function;

  /// Throws ConfigError listing every violation when the deployment is invalid.
  static ResolvedDeployment resolve(const Topology& topology, const ServiceChain& service,
                                    const DeploymentMap& deployment);
};

struct Request {
  std::string begin_device;
  std::string end_device;
  double arrival_ms = 0.0;
  std::optional<double> deadline_override_ms;

  double deadline_ms(const ServiceChain& service) const {
    return deadline_override_ms.value_or(service.deadline_ms());
  }
};

/// One chosen instance per function, in chain order.
struct Placement {
  std::vector<FunctionInstance> chosen;
  bool operator==(const Placement&) const = default;
};

std::string to_string(const FunctionInstance& instance);
std::string to_string(const Placement& placement);

/// Minimal-delay path; empty when from == to. Throws NoPathError.
std::vector<std::string> shortest_path(const Topology& topology, const std::string& from,
                                       const std::string& to);

// Configuration documents.

/// Keys: devices[] {id, capacity, p_idle, p_dyn_full}, links[] {a|from, b|to,
/// prop_delay | distance, bandwidth, p_idle, p_dyn, directed?, id?},
/// scale_ms_per_unit. Undirected links expand into two directed links.
Topology load_topology(const nlohmann::json& doc);
/// Keys: functions[] {id, size, order?}, dataflows[] (numbers or {size}), deadline_ms.
ServiceChain load_service(const nlohmann::json& doc);
/// Keys: instances[] {device, function}.
DeploymentMap load_deployment(const nlohmann::json& doc);
/// Keys: devices {id: u}, links {id: u}; absent entries are 0.
LoadState load_load_state(const Topology& topology, const nlohmann::json& doc);
nlohmann::json to_json(const Topology& topology, const LoadState& load);

nlohmann::json read_json_file(const std::string& path);

}  // namespace drp
