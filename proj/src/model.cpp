#include "drp/model.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "drp/errors.hpp"

namespace drp {

Topology::Topology(std::vector<EdgeDevice> devices, std::vector<PhysicalLink> links)
    : devices_(std::move(devices)), links_(std::move(links)) {
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    const auto& d = devices_[i];
    if (!device_by_id_.emplace(d.id, i).second)
      throw ConfigError(fmt::format("duplicate device id '{}'", d.id));
    if (!(d.capacity_mi_per_ms > 0.0))
      throw ConfigError(fmt::format("device '{}' must have positive capacity", d.id));
    if (d.profile.idle_w < 0.0 || d.profile.dynamic_full_w < 0.0)
      throw ConfigError(fmt::format("device '{}' has negative power", d.id));
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    if (!link_by_id_.emplace(l.id, i).second)
      throw ConfigError(fmt::format("duplicate link id '{}'", l.id));
    if (l.from >= devices_.size() || l.to >= devices_.size())
      throw ConfigError(fmt::format("link '{}' references an unknown device", l.id));
    if (l.from == l.to) throw ConfigError(fmt::format("link '{}' is a self-loop", l.id));
    if (!(l.bandwidth_mb_per_ms > 0.0))
      throw ConfigError(fmt::format("link '{}' must have positive bandwidth", l.id));
    if (l.prop_delay_ms < 0.0)
      throw ConfigError(fmt::format("link '{}' has negative propagation delay", l.id));
    if (l.profile.idle_w < 0.0 || l.profile.dynamic_w < 0.0)
      throw ConfigError(fmt::format("link '{}' has negative power", l.id));
  }
  build_path_table();
}

// Dijkstra from every source. Keys are (delay, device-id sequence) so that
// among equal-delay paths the lexicographically smallest id sequence wins.
void Topology::build_path_table() {
  const std::size_t n = devices_.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return devices_[a].id < devices_[b].id; });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  std::vector<std::vector<std::size_t>> out_links(n);
  for (std::size_t i = 0; i < links_.size(); ++i) out_links[links_[i].from].push_back(i);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  path_table_.assign(n * n, Path{});
  for (std::size_t src = 0; src < n; ++src) {
    std::vector<double> dist(n, kInf);
    std::vector<std::vector<std::size_t>> seq(n);
    std::vector<std::vector<std::size_t>> via(n);
    std::vector<bool> settled(n, false);
    dist[src] = 0.0;
    seq[src] = {rank[src]};

    auto better = [&](double d1, const std::vector<std::size_t>& s1, double d2,
                      const std::vector<std::size_t>& s2) {
      if (d1 != d2) return d1 < d2;
      return s1 < s2;
    };

    for (std::size_t iter = 0; iter < n; ++iter) {
      std::size_t u = n;
      for (std::size_t v = 0; v < n; ++v) {
        if (settled[v] || dist[v] == kInf) continue;
        if (u == n || better(dist[v], seq[v], dist[u], seq[u])) u = v;
      }
      if (u == n) break;
      settled[u] = true;
      for (std::size_t li : out_links[u]) {
        const auto& l = links_[li];
        if (settled[l.to]) continue;
        double cand = dist[u] + l.prop_delay_ms;
        auto cand_seq = seq[u];
        cand_seq.push_back(rank[l.to]);
        if (dist[l.to] == kInf || better(cand, cand_seq, dist[l.to], seq[l.to])) {
          dist[l.to] = cand;
          seq[l.to] = std::move(cand_seq);
          via[l.to] = via[u];
          via[l.to].push_back(li);
        }
      }
    }
    for (std::size_t dst = 0; dst < n; ++dst) {
      if (dist[dst] == kInf)
        throw ConfigError(fmt::format("topology is disconnected: no path from '{}' to '{}'",
                                      devices_[src].id, devices_[dst].id));
      Path p;
      p.links = via[dst];
      for (std::size_t li : p.links) p.delay_ms += links_[li].prop_delay_ms;
      path_table_[src * n + dst] = std::move(p);
    }
  }
}

std::optional<std::size_t> Topology::find_device(const std::string& id) const {
  auto it = device_by_id_.find(id);
  if (it == device_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Topology::find_link(const std::string& id) const {
  auto it = link_by_id_.find(id);
  if (it == link_by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t Topology::device_index(const std::string& id) const {
  if (auto i = find_device(id)) return *i;
  throw ConfigError(fmt::format("unknown device '{}'", id));
}

std::size_t Topology::link_index(const std::string& id) const {
  if (auto i = find_link(id)) return *i;
  throw ConfigError(fmt::format("unknown link '{}'", id));
}

LoadState LoadState::idle(const Topology& topology) {
  return LoadState{std::vector<double>(topology.device_count(), 0.0),
                   std::vector<double>(topology.link_count(), 0.0)};
}

ServiceChain::ServiceChain(std::vector<FunctionSpec> functions, std::vector<Dataflow> dataflows,
                           double deadline_ms)
    : functions_(std::move(functions)), dataflows_(std::move(dataflows)), deadline_ms_(deadline_ms) {
  if (functions_.empty()) throw ConfigError("service chain has no functions");
  if (!(deadline_ms_ > 0.0)) throw ConfigError("service deadline must be positive");
  std::stable_sort(functions_.begin(), functions_.end(),
                   [](const FunctionSpec& a, const FunctionSpec& b) { return a.order < b.order; });
  std::set<std::string> ids;
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    const auto& f = functions_[i];
    if (f.order != static_cast<int>(i) + 1)
      throw ConfigError("function orders must be 1..|F| without gaps");
    if (!(f.size_mi > 0.0))
      throw ConfigError(fmt::format("function '{}' must have positive size", f.id));
    if (!ids.insert(f.id).second) throw ConfigError(fmt::format("duplicate function id '{}'", f.id));
  }
  if (dataflows_.size() != functions_.size() + 1)
    throw ConfigError(fmt::format("expected {} dataflows, got {}", functions_.size() + 1,
                                  dataflows_.size()));
  std::sort(dataflows_.begin(), dataflows_.end(),
            [](const Dataflow& a, const Dataflow& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < dataflows_.size(); ++i) {
    if (dataflows_[i].index != i) throw ConfigError("dataflow indices must be 0..|F|");
    if (dataflows_[i].size_mb < 0.0) throw ConfigError("dataflow size must be nonnegative");
  }
}

std::optional<std::size_t> ServiceChain::find_function(const std::string& id) const {
  for (std::size_t i = 0; i < functions_.size(); ++i)
    if (functions_[i].id == id) return i;
  return std::nullopt;
}

std::size_t ServiceChain::function_index(const std::string& id) const {
  if (auto i = find_function(id)) return *i;
  throw ConfigError(fmt::format("unknown function '{}'", id));
}

DeploymentMap DeploymentMap::first_k(const ServiceChain& service, std::size_t per_function) const {
  std::map<std::string, std::size_t> taken;
  DeploymentMap out;
  for (const auto& inst : instances) {
    if (!service.find_function(inst.function)) continue;
    if (taken[inst.function]++ < per_function) out.instances.push_back(inst);
  }
  return out;
}

std::vector<DeploymentViolation> validate_deployment(const Topology& topology,
                                                     const ServiceChain& service,
                                                     const DeploymentMap& deployment) {
  using Kind = DeploymentViolation::Kind;
  std::vector<DeploymentViolation> out;
  std::set<FunctionInstance> seen;
  std::vector<std::size_t> per_function(service.size(), 0);
  for (const auto& inst : deployment.instances) {
    bool ok = true;
    if (!topology.find_device(inst.device)) {
      out.push_back({Kind::UnknownDevice,
                     fmt::format("instance {} references unknown device", to_string(inst))});
      ok = false;
    }
    auto f = service.find_function(inst.function);
    if (!f) {
      out.push_back({Kind::UnknownFunction,
                     fmt::format("instance {} references unknown function", to_string(inst))});
      ok = false;
    }
    if (!seen.insert(inst).second) {
      out.push_back({Kind::DuplicateInstance,
                     fmt::format("duplicate instance {}", to_string(inst))});
      ok = false;
    }
    if (ok) ++per_function[*f];
  }
  for (std::size_t f = 0; f < service.size(); ++f) {
    if (per_function[f] == 0)
      out.push_back({Kind::EmptyFunction,
                     fmt::format("V_f empty for {}", service.functions()[f].id)});
  }
  return out;
}

ResolvedDeployment ResolvedDeployment::resolve(const Topology& topology,
                                               const ServiceChain& service,
                                               const DeploymentMap& deployment) {
  auto violations = validate_deployment(topology, service, deployment);
  if (!violations.empty()) {
    std::string msg = "invalid deployment:";
    for (const auto& v : violations) msg += " " + v.message + ";";
    throw ConfigError(msg);
  }
  ResolvedDeployment out;
  out.by_function.resize(service.size());
  std::vector<Instance> sorted;
  for (const auto& inst : deployment.instances)
    sorted.push_back({topology.device_index(inst.device), service.function_index(inst.function)});
  std::sort(sorted.begin(), sorted.end(), [&](const Instance& a, const Instance& b) {
    if (a.function != b.function) return a.function < b.function;
    return topology.device(a.device).id < topology.device(b.device).id;
  });
  for (const auto& inst : sorted) {
    out.by_function[inst.function].push_back(out.instances.size());
    out.instances.push_back(inst);
  }
  return out;
}

std::string to_string(const FunctionInstance& instance) {
  return instance.function + "@" + instance.device;
}

std::string to_string(const Placement& placement) {
  std::string out;
  for (const auto& inst : placement.chosen) {
    if (!out.empty()) out += ';';
    out += to_string(inst);
  }
  return out;
}

std::vector<std::string> shortest_path(const Topology& topology, const std::string& from,
                                       const std::string& to) {
  auto a = topology.find_device(from);
  auto b = topology.find_device(to);
  if (!a || !b) throw NoPathError(fmt::format("no path from '{}' to '{}'", from, to));
  std::vector<std::string> out;
  for (std::size_t li : topology.path(*a, *b).links) out.push_back(topology.link(li).id);
  return out;
}

namespace {

using nlohmann::json;

double number(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number())
    throw ConfigError(fmt::format("{}: missing numeric field '{}'", where, key));
  return it->get<double>();
}

double number_or(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) throw ConfigError(fmt::format("field '{}' must be numeric", key));
  return it->get<double>();
}

std::string text(const json& obj, std::initializer_list<const char*> keys,
                 const std::string& where) {
  for (const char* key : keys) {
    auto it = obj.find(key);
    if (it != obj.end()) {
      if (!it->is_string()) throw ConfigError(fmt::format("{}: '{}' must be a string", where, key));
      return it->get<std::string>();
    }
  }
  throw ConfigError(fmt::format("{}: missing field '{}'", where, *keys.begin()));
}

const json& array(const json& doc, const char* key, bool required) {
  static const json empty = json::array();
  auto it = doc.find(key);
  if (it == doc.end()) {
    if (required) throw ConfigError(fmt::format("missing array '{}'", key));
    return empty;
  }
  if (!it->is_array()) throw ConfigError(fmt::format("'{}' must be an array", key));
  return *it;
}

}  // namespace

Topology load_topology(const json& doc) {
  if (!doc.is_object()) throw ConfigError("topology document must be an object");
  const double scale = number_or(doc, "scale_ms_per_unit", 1.0);
  if (!(scale > 0.0)) throw ConfigError("scale_ms_per_unit must be positive");

  std::vector<EdgeDevice> devices;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& d : array(doc, "devices", true)) {
    EdgeDevice dev;
    dev.id = text(d, {"id"}, "device");
    dev.capacity_mi_per_ms = number(d, "capacity", "device " + dev.id);
    dev.profile.idle_w = number(d, "p_idle", "device " + dev.id);
    dev.profile.dynamic_full_w = number(d, "p_dyn_full", "device " + dev.id);
    index.emplace(dev.id, devices.size());
    devices.push_back(std::move(dev));
  }

  std::vector<PhysicalLink> links;
  for (const auto& l : array(doc, "links", false)) {
    const std::string a = text(l, {"a", "from"}, "link");
    const std::string b = text(l, {"b", "to"}, "link");
    const std::string where = "link " + a + "-" + b;
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end() || ib == index.end())
      throw ConfigError(where + ": unknown endpoint");
    PhysicalLink base;
    if (l.contains("prop_delay"))
      base.prop_delay_ms = number(l, "prop_delay", where);
    else
      base.prop_delay_ms = number(l, "distance", where) * scale;
    base.bandwidth_mb_per_ms = number(l, "bandwidth", where);
    base.profile.idle_w = number(l, "p_idle", where);
    base.profile.dynamic_w = number(l, "p_dyn", where);
    const bool directed = l.value("directed", false);

    PhysicalLink fwd = base;
    fwd.from = ia->second;
    fwd.to = ib->second;
    fwd.id = directed && l.contains("id") ? l.at("id").get<std::string>() : a + "->" + b;
    links.push_back(fwd);
    if (!directed) {
      PhysicalLink rev = base;
      rev.from = ib->second;
      rev.to = ia->second;
      rev.id = b + "->" + a;
      links.push_back(rev);
    }
  }
  return Topology(std::move(devices), std::move(links));
}

ServiceChain load_service(const json& doc) {
  if (!doc.is_object()) throw ConfigError("service document must be an object");
  std::vector<FunctionSpec> functions;
  int next_order = 1;
  for (const auto& f : array(doc, "functions", true)) {
    FunctionSpec spec;
    spec.id = text(f, {"id"}, "function");
    spec.size_mi = number(f, "size", "function " + spec.id);
    spec.order = f.value("order", next_order);
    ++next_order;
    functions.push_back(std::move(spec));
  }
  std::vector<Dataflow> dataflows;
  for (const auto& d : array(doc, "dataflows", true)) {
    Dataflow flow;
    flow.index = dataflows.size();
    if (d.is_number()) {
      flow.size_mb = d.get<double>();
    } else {
      flow.size_mb = number(d, "size", "dataflow");
      flow.index = d.value("index", flow.index);
    }
    dataflows.push_back(flow);
  }
  return ServiceChain(std::move(functions), std::move(dataflows),
                      number(doc, "deadline_ms", "service"));
}

DeploymentMap load_deployment(const json& doc) {
  if (!doc.is_object()) throw ConfigError("deployment document must be an object");
  DeploymentMap out;
  for (const auto& i : array(doc, "instances", true))
    out.instances.push_back({text(i, {"device"}, "instance"), text(i, {"function"}, "instance")});
  return out;
}

LoadState load_load_state(const Topology& topology, const json& doc) {
  LoadState load = LoadState::idle(topology);
  auto read = [&](const char* key, auto&& resolve, std::vector<double>& into) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    if (!it->is_object()) throw ConfigError(fmt::format("'{}' must be an object", key));
    for (const auto& [id, value] : it->items()) {
      if (!value.is_number()) throw ConfigError(fmt::format("utilization of '{}' must be numeric", id));
      const double u = value.template get<double>();
      if (!(u >= 0.0 && u <= 1.0))
        throw ConfigError(fmt::format("utilization of '{}' outside [0,1]", id));
      into[resolve(id)] = u;
    }
  };
  read("devices", [&](const std::string& id) { return topology.device_index(id); },
       load.device_util);
  read("links", [&](const std::string& id) { return topology.link_index(id); }, load.link_util);
  return load;
}

nlohmann::json to_json(const Topology& topology, const LoadState& load) {
  json doc = {{"devices", json::object()}, {"links", json::object()}};
  for (std::size_t i = 0; i < topology.device_count(); ++i)
    doc["devices"][topology.device(i).id] = load.device_util.at(i);
  for (std::size_t i = 0; i < topology.link_count(); ++i)
    doc["links"][topology.link(i).id] = load.link_util.at(i);
  return doc;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace drp
