#pragma once

// Seeded load scenarios and run-group expansion.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drp/model.hpp"
#include "drp/solver.hpp"

namespace drp {

/// Percent-valued load distribution. Draws are divided by 100 and clamped
/// to [0,1].
struct LoadDistribution {
  enum class Kind { None, Fixed, Normal };
  Kind kind = Kind::None;
  double mean_pct = 0.0;
  double stddev_pct = 0.0;
  double level_pct = 0.0;

  static LoadDistribution none() { return {}; }
  static LoadDistribution fixed(double level_pct);
  static LoadDistribution normal(double mean_pct, double stddev_pct);

  /// Replaces the mean (Normal) or level (Fixed) by a sweep level.
  LoadDistribution at_level(double level_pct) const;
  std::string describe() const;
};

struct RunGroupSpec {
  int group_id = 0;
  std::string name;
  LoadDistribution device_load;
  LoadDistribution link_load;
  std::size_t instances_per_function = 2;
  std::size_t runs = 25;
  /// Device load levels in percent; empty means no sweep.
  std::vector<int> load_sweep;
  std::optional<std::uint64_t> base_seed;
};

struct CampaignSpec {
  std::uint64_t base_seed = 0;
  std::string begin_device;
  std::string end_device;
  std::vector<RunGroupSpec> groups;
};

struct RunInstance {
  int group_id = 0;
  std::string group_name;
  std::optional<int> load_level;
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  Objective objective = Objective::OverallEnergy;
  std::size_t instances_per_function = 0;
  LoadDistribution device_load;
  LoadDistribution link_load;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Each element's draw depends only on (seed, element kind, element index).
LoadState generate_scenario(const Topology& topology, const LoadDistribution& device_load,
                            const LoadDistribution& link_load, std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t base_seed, int group_id, std::optional<int> level,
                          std::size_t run_index);

/// Groups in order, then levels, then runs; each scenario yields one
/// instance per objective (Overall first).
std::vector<RunInstance> expand_campaign(const std::vector<RunGroupSpec>& groups,
                                         std::uint64_t base_seed);

/// The standard sweep 0, 10, ..., 100.
std::vector<int> default_sweep();

/// Keys: base_seed, request {begin, end}, groups[] {group, name, device_load,
/// link_load, instances_per_function, runs, sweep}. A distribution is "none",
/// {"kind": "fixed", "level"} or {"kind": "normal", "mean"?, "stddev"}; sweep
/// is true or a list of levels.
CampaignSpec load_campaign(const nlohmann::json& doc);

}  // namespace drp
