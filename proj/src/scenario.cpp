#include "drp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "drp/errors.hpp"

namespace drp {

LoadDistribution LoadDistribution::fixed(double level_pct) {
  if (!(level_pct >= 0.0 && level_pct <= 100.0)) throw ConfigError("fixed load outside [0,100]");
  LoadDistribution d;
  d.kind = Kind::Fixed;
  d.level_pct = level_pct;
  return d;
}

LoadDistribution LoadDistribution::normal(double mean_pct, double stddev_pct) {
  if (!(mean_pct >= 0.0 && mean_pct <= 100.0)) throw ConfigError("normal mean outside [0,100]");
  if (!(stddev_pct >= 0.0)) throw ConfigError("normal stddev must be nonnegative");
  LoadDistribution d;
  d.kind = Kind::Normal;
  d.mean_pct = mean_pct;
  d.stddev_pct = stddev_pct;
  return d;
}

LoadDistribution LoadDistribution::at_level(double level_pct) const {
  switch (kind) {
    case Kind::Fixed:
      return fixed(level_pct);
    case Kind::Normal:
      return normal(level_pct, stddev_pct);
    case Kind::None:
      break;
  }
  return *this;
}

std::string LoadDistribution::describe() const {
  switch (kind) {
    case Kind::Fixed:
      return fmt::format("fixed({})", level_pct);
    case Kind::Normal:
      return fmt::format("normal({}, {})", mean_pct, stddev_pct);
    case Kind::None:
      break;
  }
  return "none";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

enum class Element : std::uint64_t { Device = 1, Link = 2 };

double draw(const LoadDistribution& dist, std::uint64_t seed, Element kind, std::size_t index) {
  switch (dist.kind) {
    case LoadDistribution::Kind::None:
      return 0.0;
    case LoadDistribution::Kind::Fixed:
      return std::clamp(dist.level_pct / 100.0, 0.0, 1.0);
    case LoadDistribution::Kind::Normal:
      break;
  }
  const std::uint64_t stream =
      splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(kind) << 48) ^ index));
  std::mt19937_64 engine(stream);
  auto unit = [&] { return static_cast<double>(engine() >> 11) * 0x1.0p-53; };
  // Box-Muller; 1 - unit() lies in (0, 1].
  const double r = std::sqrt(-2.0 * std::log(1.0 - unit()));
  const double z = r * std::cos(2.0 * std::numbers::pi * unit());
  const double pct = dist.mean_pct + dist.stddev_pct * z;
  return std::clamp(pct / 100.0, 0.0, 1.0);
}

}  // namespace

LoadState generate_scenario(const Topology& topology, const LoadDistribution& device_load,
                            const LoadDistribution& link_load, std::uint64_t seed) {
  LoadState load = LoadState::idle(topology);
  for (std::size_t i = 0; i < topology.device_count(); ++i)
    load.device_util[i] = draw(device_load, seed, Element::Device, i);
  for (std::size_t i = 0; i < topology.link_count(); ++i)
    load.link_util[i] = draw(link_load, seed, Element::Link, i);
  return load;
}

std::uint64_t derive_seed(std::uint64_t base_seed, int group_id, std::optional<int> level,
                          std::size_t run_index) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(group_id));
  h = splitmix64(h ^ (level ? static_cast<std::uint64_t>(*level) + 1 : 0));
  return splitmix64(h ^ run_index);
}

std::vector<int> default_sweep() {
  std::vector<int> levels;
  for (int level = 0; level <= 100; level += 10) levels.push_back(level);
  return levels;
}

std::vector<RunInstance> expand_campaign(const std::vector<RunGroupSpec>& groups,
                                         std::uint64_t base_seed) {
  std::vector<RunInstance> out;
  for (const auto& g : groups) {
    if (g.instances_per_function < 1) throw ConfigError("instances_per_function must be >= 1");
    if (g.runs < 1) throw ConfigError("runs must be >= 1");
    std::vector<std::optional<int>> levels;
    if (g.load_sweep.empty())
      levels.push_back(std::nullopt);
    else
      levels.assign(g.load_sweep.begin(), g.load_sweep.end());
    for (const auto& level : levels) {
      const auto device_load = level ? g.device_load.at_level(*level) : g.device_load;
      for (std::size_t run = 0; run < g.runs; ++run) {
        const auto seed = derive_seed(g.base_seed.value_or(base_seed), g.group_id, level, run);
        for (auto objective : {Objective::OverallEnergy, Objective::MarginalEnergy}) {
          out.push_back({g.group_id, g.name, level, run, seed, objective,
                         g.instances_per_function, device_load, g.link_load});
        }
      }
    }
  }
  return out;
}

namespace {

LoadDistribution parse_distribution(const nlohmann::json& doc) {
  if (doc.is_null() || (doc.is_string() && doc.get<std::string>() == "none"))
    return LoadDistribution::none();
  if (!doc.is_object()) throw ConfigError("load distribution must be \"none\" or an object");
  const auto kind = doc.value("kind", std::string("none"));
  if (kind == "none") return LoadDistribution::none();
  if (kind == "fixed") return LoadDistribution::fixed(doc.value("level", 0.0));
  if (kind == "normal") return LoadDistribution::normal(doc.value("mean", 0.0), doc.value("stddev", 0.0));
  throw ConfigError(fmt::format("unknown load distribution kind '{}'", kind));
}

}  // namespace

CampaignSpec load_campaign(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("campaign document must be an object");
  CampaignSpec spec;
  try {
    spec.base_seed = doc.value("base_seed", std::uint64_t{0});
    const auto& request = doc.at("request");
    spec.begin_device = request.at("begin").get<std::string>();
    spec.end_device = request.value("end", spec.begin_device);
    for (const auto& g : doc.at("groups")) {
      RunGroupSpec group;
      group.group_id = g.at("group").get<int>();
      group.name = g.value("name", fmt::format("group{}", group.group_id));
      if (group.name.find_first_of(",\n\"") != std::string::npos)
        throw ConfigError("group names may not contain commas, quotes or newlines");
      group.device_load = parse_distribution(g.value("device_load", nlohmann::json()));
      group.link_load = parse_distribution(g.value("link_load", nlohmann::json()));
      group.instances_per_function = g.value("instances_per_function", std::size_t{2});
      group.runs = g.value("runs", std::size_t{25});
      if (auto it = g.find("sweep"); it != g.end()) {
        if (it->is_boolean()) {
          if (it->get<bool>()) group.load_sweep = default_sweep();
        } else if (!it->is_null()) {
          group.load_sweep = it->get<std::vector<int>>();
        }
      }
      for (int level : group.load_sweep)
        if (level < 0 || level > 100) throw ConfigError("sweep levels must lie in [0,100]");
      if (g.contains("base_seed")) group.base_seed = g.at("base_seed").get<std::uint64_t>();
      spec.groups.push_back(std::move(group));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("campaign document: {}", e.what()));
  }
  // Validate counts early.
  (void)expand_campaign(spec.groups, spec.base_seed);
  return spec;
}

}  // namespace drp
