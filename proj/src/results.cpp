#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "drp/errors.hpp"
#include "drp/harness.hpp"

namespace drp {

double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw EmptySelection("percentile of an empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

StatSummary summarize_values(std::vector<double> values) {
  if (values.empty()) throw EmptySelection("statistics of an empty sample");
  // Sorting first makes every statistic independent of input order.
  std::sort(values.begin(), values.end());
  StatSummary s;
  s.count = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
  // A constant sample has exactly its value as mean and no spread; the
  // rounded sum would leave residues of order 1e-15.
  if (values.front() == values.back()) {
    s.mean = values.front();
  } else {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.count - 1));
  }
  s.p10 = nearest_rank(values, 10);
  s.median = nearest_rank(values, 50);
  s.p90 = nearest_rank(values, 90);
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<GroupKey>& keys) {
  if (records.empty()) throw EmptySelection("no records to summarize");
  auto has = [&](GroupKey k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
  using Key = std::tuple<std::optional<int>, std::optional<int>, std::optional<int>,
                         std::optional<std::size_t>>;
  std::map<Key, std::vector<const RunRecord*>> buckets;
  for (const auto& r : records) {
    Key key{has(GroupKey::Group) ? std::optional<int>(r.group_id) : std::nullopt,
            has(GroupKey::LoadLevel) ? r.load_level : std::nullopt,
            has(GroupKey::Objective) ? std::optional<int>(static_cast<int>(r.objective)) : std::nullopt,
            has(GroupKey::Instances) ? std::optional<std::size_t>(r.instances_per_function)
                                     : std::nullopt};
    buckets[key].push_back(&r);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : buckets) {
    SummaryRow row;
    row.group_id = std::get<0>(key);
    row.load_level = std::get<1>(key);
    if (auto obj = std::get<2>(key)) row.objective = static_cast<Objective>(*obj);
    row.instances_per_function = std::get<3>(key);
    if (row.group_id) row.group_name = members.front()->group_name;
    std::vector<double> completion, overall, marginal, solver;
    for (const RunRecord* r : members) {
      ++row.runs;
      if (r->diverged) ++row.diverged;
      if (!r->feasible) continue;
      ++row.feasible;
      completion.push_back(r->completion_time_ms);
      overall.push_back(r->energy_overall_mj);
      marginal.push_back(r->energy_marginal_mj);
      solver.push_back(r->solver_time_ms);
    }
    if (row.feasible > 0) {
      row.completion_time_ms = summarize_values(completion);
      row.energy_overall_mj = summarize_values(overall);
      row.energy_marginal_mj = summarize_values(marginal);
      row.solver_time_ms = summarize_values(solver);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string opt_text(const std::optional<int>& v) { return v ? std::to_string(*v) : "-"; }

std::string stats_cells(const std::optional<StatSummary>& s, int precision) {
  if (!s) return fmt::format("{:>9} {:>8} {:>9} {:>9} {:>9}", "-", "-", "-", "-", "-");
  return fmt::format("{:>9.{}f} {:>8.{}f} {:>9.{}f} {:>9.{}f} {:>9.{}f}", s->mean, precision,
                     s->stddev, precision, s->p10, precision, s->median, precision, s->p90,
                     precision);
}

}  // namespace

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::string out;
  const char* stat_head = "     mean    stdev       p10    median       p90";
  struct Block {
    const char* title;
    std::optional<StatSummary> SummaryRow::*field;
    int precision;
  };
  const Block blocks[] = {{"Request completion time (ms)", &SummaryRow::completion_time_ms, 2},
                          {"Overall energy (mJ)", &SummaryRow::energy_overall_mj, 1},
                          {"Marginal energy (mJ)", &SummaryRow::energy_marginal_mj, 1},
                          {"Solver time (ms)", &SummaryRow::solver_time_ms, 3}};
  for (const auto& block : blocks) {
    out += fmt::format("{}\n{:>6} {:>6} {:>9} {:>5} {:>5} {:>5} {}\n", block.title, "group", "level",
                       "objective", "runs", "feas", "div", stat_head);
    for (const auto& row : rows) {
      out += fmt::format("{:>6} {:>6} {:>9} {:>5} {:>5} {:>5} {}\n", opt_text(row.group_id),
                         opt_text(row.load_level),
                         row.objective ? to_string(*row.objective) : std::string("-"), row.runs,
                         row.feasible, row.diverged, stats_cells(row.*block.field, block.precision));
    }
    out += "\n";
  }
  return out;
}

namespace {

constexpr const char* kCsvHeader =
    "group,name,load_level,instances,run,seed,objective,feasible,completion_time_ms,"
    "energy_overall_mj,energy_marginal_mj,solver_time_ms,placement,diverged";

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& cell) {
  std::size_t used = 0;
  const double v = std::stod(cell, &used);
  if (used != cell.size()) throw ConfigError(fmt::format("bad number '{}'", cell));
  return v;
}

}  // namespace

void write_records_csv(const std::vector<RunRecord>& records, std::ostream& out,
                       const RecordWriteOptions& options) {
  std::string header = kCsvHeader;
  if (!options.include_solver_time) {
    const std::string col = "solver_time_ms,";
    header.erase(header.find(col), col.size());
  }
  out << header << '\n';
  for (const auto& r : records) {
    std::string line = fmt::format("{},{},{},{},{},{},{},{},", r.group_id, r.group_name,
                                   r.load_level ? std::to_string(*r.load_level) : "",
                                   r.instances_per_function, r.run_index, r.seed,
                                   to_string(r.objective), r.feasible ? 1 : 0);
    if (r.feasible)
      line += fmt::format("{},{},{},", r.completion_time_ms, r.energy_overall_mj, r.energy_marginal_mj);
    else
      line += ",,,";
    if (options.include_solver_time) line += fmt::format("{},", r.solver_time_ms);
    line += join(r.placement, ';');
    line += fmt::format(",{}", r.diverged ? 1 : 0);
    out << line << '\n';
  }
}

std::vector<RunRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("records file is empty");
  const auto header = split(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"group", "objective", "feasible", "run", "seed"})
    if (!col.count(required)) throw ConfigError(fmt::format("records file lacks column '{}'", required));

  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw ConfigError(fmt::format("records row has {} cells, expected {}", cells.size(), header.size()));
    auto cell = [&](const char* name) -> std::string {
      auto it = col.find(name);
      return it == col.end() ? std::string() : cells[it->second];
    };
    RunRecord r;
    r.group_id = std::stoi(cell("group"));
    r.group_name = cell("name");
    if (!cell("load_level").empty()) r.load_level = std::stoi(cell("load_level"));
    if (!cell("instances").empty()) r.instances_per_function = std::stoul(cell("instances"));
    r.run_index = std::stoul(cell("run"));
    r.seed = std::stoull(cell("seed"));
    r.objective = parse_objective(cell("objective"));
    r.feasible = cell("feasible") == "1";
    if (r.feasible) {
      r.completion_time_ms = parse_double(cell("completion_time_ms"));
      r.energy_overall_mj = parse_double(cell("energy_overall_mj"));
      r.energy_marginal_mj = parse_double(cell("energy_marginal_mj"));
    }
    if (!cell("solver_time_ms").empty()) r.solver_time_ms = parse_double(cell("solver_time_ms"));
    if (!cell("placement").empty()) r.placement = split(cell("placement"), ';');
    r.diverged = cell("diverged") == "1";
    out.push_back(std::move(r));
  }
  return out;
}

void write_records_jsonl(const std::vector<RunRecord>& records, std::ostream& out,
                         const RecordWriteOptions& options) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["group"] = r.group_id;
    j["name"] = r.group_name;
    j["load_level"] = r.load_level ? nlohmann::ordered_json(*r.load_level) : nlohmann::ordered_json();
    j["instances"] = r.instances_per_function;
    j["run"] = r.run_index;
    j["seed"] = r.seed;
    j["objective"] = to_string(r.objective);
    j["feasible"] = r.feasible;
    if (r.feasible) {
      j["completion_time_ms"] = r.completion_time_ms;
      j["energy_overall_mj"] = r.energy_overall_mj;
      j["energy_marginal_mj"] = r.energy_marginal_mj;
    }
    if (options.include_solver_time) j["solver_time_ms"] = r.solver_time_ms;
    j["placement"] = r.placement;
    j["diverged"] = r.diverged;
    out << j.dump() << '\n';
  }
}

std::vector<RunRecord> read_records_jsonl(std::istream& in) {
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RunRecord r;
      r.group_id = j.at("group").get<int>();
      r.group_name = j.value("name", std::string());
      if (!j.at("load_level").is_null()) r.load_level = j.at("load_level").get<int>();
      r.instances_per_function = j.value("instances", std::size_t{0});
      r.run_index = j.at("run").get<std::size_t>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.objective = parse_objective(j.at("objective").get<std::string>());
      r.feasible = j.at("feasible").get<bool>();
      if (r.feasible) {
        r.completion_time_ms = j.at("completion_time_ms").get<double>();
        r.energy_overall_mj = j.at("energy_overall_mj").get<double>();
        r.energy_marginal_mj = j.at("energy_marginal_mj").get<double>();
      }
      r.solver_time_ms = j.value("solver_time_ms", 0.0);
      r.placement = j.value("placement", std::vector<std::string>{});
      r.diverged = j.value("diverged", false);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("bad record line: {}", e.what()));
    }
  }
  return out;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "group,load_level,objective,instances,runs,feasible,diverged";
  for (const char* metric : {"completion_time_ms", "energy_overall_mj", "energy_marginal_mj",
                             "solver_time_ms"})
    for (const char* stat : {"mean", "stddev", "p10", "median", "p90"})
      out << ',' << metric << '_' << stat;
  out << '\n';
  for (const auto& row : rows) {
    out << (row.group_id ? std::to_string(*row.group_id) : "") << ','
        << (row.load_level ? std::to_string(*row.load_level) : "") << ','
        << (row.objective ? to_string(*row.objective) : "") << ','
        << (row.instances_per_function ? std::to_string(*row.instances_per_function) : "") << ','
        << row.runs << ',' << row.feasible << ',' << row.diverged;
    for (const auto* s : {&row.completion_time_ms, &row.energy_overall_mj, &row.energy_marginal_mj,
                          &row.solver_time_ms}) {
      if (*s)
        out << fmt::format(",{},{},{},{},{}", (*s)->mean, (*s)->stddev, (*s)->p10, (*s)->median,
                           (*s)->p90);
      else
        out << ",,,,,";
    }
    out << '\n';
  }
}

void write_figure_csv(const std::vector<RunRecord>& records,
                      const std::function<double(const RunRecord&)>& metric, std::ostream& out) {
  out << "load_level,objective,runs,feasible,mean,stddev\n";
  std::map<std::pair<int, int>, std::pair<std::size_t, std::vector<double>>> cells;
  for (const auto& r : records) {
    auto& cell = cells[{r.load_level.value_or(-1), static_cast<int>(r.objective)}];
    ++cell.first;
    if (r.feasible) cell.second.push_back(metric(r));
  }
  for (const auto& [key, cell] : cells) {
    out << (key.first >= 0 ? std::to_string(key.first) : "") << ','
        << to_string(static_cast<Objective>(key.second)) << ',' << cell.first << ','
        << cell.second.size();
    if (cell.second.empty()) {
      out << ",,\n";
    } else {
      const auto s = summarize_values(cell.second);
      out << fmt::format(",{},{}\n", s.mean, s.stddev);
    }
  }
}

std::vector<std::filesystem::path> emit_results(const std::vector<RunRecord>& records,
                                                const std::filesystem::path& directory,
                                                RecordFormat format) {
  std::filesystem::create_directories(directory);
  std::vector<std::filesystem::path> written;
  const std::string ext = format == RecordFormat::Csv ? "csv" : "jsonl";
  auto open = [&](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    written.push_back(path);
    return out;
  };
  auto write = [&](const std::vector<RunRecord>& subset, const std::filesystem::path& path) {
    auto out = open(path);
    if (format == RecordFormat::Csv)
      write_records_csv(subset, out);
    else
      write_records_jsonl(subset, out);
  };

  write(records, directory / ("records." + ext));
  std::map<int, std::vector<RunRecord>> by_group;
  for (const auto& r : records) by_group[r.group_id].push_back(r);
  for (const auto& [group, subset] : by_group) {
    write(subset, directory / fmt::format("records_group{}.{}", group, ext));
    const bool swept = std::any_of(subset.begin(), subset.end(),
                                   [](const RunRecord& r) { return r.load_level.has_value(); });
    if (!swept) continue;
    {
      auto out = open(directory / fmt::format("fig_energy_group{}.csv", group));
      write_figure_csv(subset, [](const RunRecord& r) { return r.energy_overall_mj; }, out);
    }
    {
      auto out = open(directory / fmt::format("fig_completion_group{}.csv", group));
      write_figure_csv(subset, [](const RunRecord& r) { return r.completion_time_ms; }, out);
    }
    {
      auto out = open(directory / fmt::format("fig_solver_time_group{}.csv", group));
      write_figure_csv(subset, [](const RunRecord& r) { return r.solver_time_ms; }, out);
    }
  }
  if (!records.empty()) {
    auto out = open(directory / "summary.csv");
    write_summary_csv(summarize(records, {GroupKey::Group, GroupKey::LoadLevel, GroupKey::Objective}),
                      out);
  }
  return written;
}

}  // namespace drp
