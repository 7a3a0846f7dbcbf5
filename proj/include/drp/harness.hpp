#pragma once

// Batch execution of placement campaigns and their statistics.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "drp/model.hpp"
#include "drp/scenario.hpp"
#include "drp/solver.hpp"

namespace drp {

struct RunRecord {
  int group_id = 0;
  std::string group_name;
  std::optional<int> load_level;
  std::size_t instances_per_function = 0;
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  Objective objective = Objective::OverallEnergy;
  bool feasible = false;
  double completion_time_ms = 0.0;
  double energy_overall_mj = 0.0;
  double energy_marginal_mj = 0.0;
  double solver_time_ms = 0.0;
  /// Instance ids in chain order; empty when infeasible.
  std::vector<std::string> placement;
  bool diverged = false;
};

struct CampaignInputs {
  const Topology& topology;
  const ServiceChain& service;
  /// All instances; each group keeps the first k per function.
  const DeploymentMap& deployment;
  CampaignSpec campaign;
};

/// Number of worker threads from DRP_JOBS, else the hardware concurrency.
std::size_t default_parallelism();

/// Solves every scenario of the campaign with both objectives. Records come
/// back in expansion order regardless of `parallelism`.
std::vector<RunRecord> run_campaign(const CampaignInputs& inputs, std::size_t parallelism);

/// Re-creates the problem of a record's scenario.
LoadState scenario_load(const CampaignInputs& inputs, const RunRecord& record);

struct StatSummary {
  std::size_t count = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double stddev = 0.0;
  double p10 = 0.0;
  double median = 0.0;
  double p90 = 0.0;
};

/// Nearest-rank percentile of ascending `sorted`, p in (0, 100].
double nearest_rank(const std::vector<double>& sorted, double p);
StatSummary summarize_values(std::vector<double> values);

enum class GroupKey { Group, LoadLevel, Objective, Instances };

struct SummaryRow {
  std::optional<int> group_id;
  std::string group_name;
  std::optional<int> load_level;
  std::optional<Objective> objective;
  std::optional<std::size_t> instances_per_function;
  std::size_t runs = 0;
  std::size_t feasible = 0;
  std::size_t diverged = 0;
  /// Absent when no run of the row is feasible.
  std::optional<StatSummary> completion_time_ms;
  std::optional<StatSummary> energy_overall_mj;
  std::optional<StatSummary> energy_marginal_mj;
  std::optional<StatSummary> solver_time_ms;
};

/// Infeasible runs count toward `runs` but not toward the metric statistics.
/// Throws EmptySelection for an empty record set.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<GroupKey>& keys);

std::string format_summary_table(const std::vector<SummaryRow>& rows);

enum class RecordFormat { Csv, JsonLines };

struct RecordWriteOptions {
  bool include_solver_time = true;
};

void write_records_csv(const std::vector<RunRecord>& records, std::ostream& out,
                       const RecordWriteOptions& options = {});
std::vector<RunRecord> read_records_csv(std::istream& in);
void write_records_jsonl(const std::vector<RunRecord>& records, std::ostream& out,
                         const RecordWriteOptions& options = {});
std::vector<RunRecord> read_records_jsonl(std::istream& in);

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);

/// Per-figure aggregate: one row per (load level, objective) with the mean
/// and standard deviation of `metric` over feasible runs.
void write_figure_csv(const std::vector<RunRecord>& records,
                      const std::function<double(const RunRecord&)>& metric, std::ostream& out);

/// Writes records.<ext>, records_group<id>.<ext>, summary.csv and, for
/// swept groups, fig_energy/fig_completion/fig_solver_time_group<id>.csv.
/// Returns the written paths.
std::vector<std::filesystem::path> emit_results(const std::vector<RunRecord>& records,
                                                const std::filesystem::path& directory,
                                                RecordFormat format);

}  // namespace drp
