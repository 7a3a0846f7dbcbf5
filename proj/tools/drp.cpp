// Command-line front end: single solves, campaigns, LP export and checks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "drp/errors.hpp"
#include "drp/harness.hpp"
#include "drp/ilp.hpp"
#include "drp/scenario.hpp"
#include "drp/solver.hpp"

namespace {

using namespace drp;

const std::string kData = DRP_DATA_DIR;

struct ModelFiles {
  std::string topology = kData + "/abilene.json";
  std::string service = kData + "/service.json";
  std::string deployment = kData + "/deployment.json";

  void add_to(CLI::App& app) {
    app.add_option("--topology", topology, "Topology document")->capture_default_str();
    app.add_option("--service", service, "Service chain document")->capture_default_str();
    app.add_option("--deployment", deployment, "Deployment document")->capture_default_str();
  }
};

struct ScenarioOptions {
  ModelFiles files;
  std::size_t instances = 0;
  std::string from = "kansascity";
  std::string to;
  std::string load_file;
  std::string device_load = "normal:50:10";
  std::string link_load = "normal:50:10";
  std::uint64_t seed = 1;
  double deadline = 0.0;

  void add_to(CLI::App& app) {
    files.add_to(app);
    app.add_option("-k,--instances", instances, "Instances per function to keep (0 = all)");
    app.add_option("--from", from, "Device receiving the request")->capture_default_str();
    app.add_option("--to", to, "Device receiving the answer (defaults to --from)");
    app.add_option("--load", load_file, "Utilization document {devices:{id:u}, links:{id:u}}");
    app.add_option("--device-load", device_load, "none | fixed:PCT | normal:MEAN:SD")
        ->capture_default_str();
    app.add_option("--link-load", link_load, "none | fixed:PCT | normal:MEAN:SD")
        ->capture_default_str();
    app.add_option("--seed", seed, "Scenario seed")->capture_default_str();
    app.add_option("--deadline", deadline, "Deadline override in ms");
  }
};

LoadDistribution parse_distribution(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
  if (parts.size() == 1 && parts[0] == "none") return LoadDistribution::none();
  if (parts.size() == 2 && parts[0] == "fixed") return LoadDistribution::fixed(std::stod(parts[1]));
  if (parts.size() == 3 && parts[0] == "normal")
    return LoadDistribution::normal(std::stod(parts[1]), std::stod(parts[2]));
  throw ConfigError(fmt::format("bad load distribution '{}'", text));
}

struct LoadedScenario {
  Topology topology;
  ServiceChain service;
  DeploymentMap deployment;
  LoadState load;
  Request request;

  PlacementProblem problem() const { return {topology, load, service, deployment, request}; }
};

LoadedScenario load_scenario(const ScenarioOptions& opt) {
  auto topology = load_topology(read_json_file(opt.files.topology));
  auto service = load_service(read_json_file(opt.files.service));
  auto deployment = load_deployment(read_json_file(opt.files.deployment));
  if (opt.instances > 0) deployment = deployment.first_k(service, opt.instances);
  LoadState load = opt.load_file.empty()
                       ? generate_scenario(topology, parse_distribution(opt.device_load),
                                           parse_distribution(opt.link_load), opt.seed)
                       : load_load_state(topology, read_json_file(opt.load_file));
  Request request;
  request.begin_device = opt.from;
  request.end_device = opt.to.empty() ? opt.from : opt.to;
  if (opt.deadline > 0.0) request.deadline_override_ms = opt.deadline;
  topology.device_index(request.begin_device);
  topology.device_index(request.end_device);
  return {std::move(topology), std::move(service), std::move(deployment), std::move(load),
          std::move(request)};
}

void print_result(const char* title, const SolveResult& r) {
  fmt::print("{} objective:\n", title);
  if (!r.feasible()) {
    fmt::print("  infeasible: {}\n", r.infeasible().reason);
  } else {
    const auto& opt = r.optimal();
    fmt::print("  placement:       {}\n", to_string(opt.placement));
    fmt::print("  completion time: {:.4f} ms\n", opt.evaluation.completion_time_ms);
    fmt::print("  overall energy:  {:.4f} mJ\n", opt.evaluation.energy_overall_mj);
    fmt::print("  marginal energy: {:.4f} mJ\n", opt.evaluation.energy_marginal_mj);
    for (const auto& hop : opt.evaluation.hops) {
      fmt::print("    {:<12} {:<26} {:>10.4f} ms {:>12.4f} mJ {:>12.4f} mJ\n",
                 hop.kind == HopCost::Kind::Execution ? "execute" : "transmit", hop.element,
                 hop.latency_ms, hop.energy_overall_mj, hop.energy_marginal_mj);
    }
  }
  fmt::print("  solver time:     {:.3f} ms ({} labels)\n", r.solver_time_ms, r.labels_explored);
}

int run_solve(const ScenarioOptions& opt, bool strict) {
  const auto s = load_scenario(opt);
  const auto both = solve_both(s.problem());
  print_result("Overall", both.overall);
  print_result("Marginal", both.marginal);
  fmt::print("placements {}\n", both.diverged ? "differ" : "identical");
  if (strict && (!both.overall.feasible() || !both.marginal.feasible())) return 2;
  return 0;
}

int run_export_lp(const ScenarioOptions& opt, const std::string& objective, const std::string& out) {
  const auto s = load_scenario(opt);
  const auto model = build_model(s.problem(), parse_objective(objective));
  const auto text = export_lp(model);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    std::ofstream file(out);
    if (!file) throw Error(fmt::format("cannot write '{}'", out));
    file << text;
  }
  std::size_t binaries = 0, generals = 0;
  for (std::size_t v = 0; v < model.variable_count(); ++v)
    (model.kind(v) == VarKind::O ? generals : binaries)++;
  std::fprintf(stderr, "%zu nodes, %zu constraints, %zu binaries + %zu generals = %zu declared\n",
               model.node_count(), model.constraints().size(), binaries, generals,
               binaries + generals);
  return 0;
}

int run_validate(const ScenarioOptions& opt, const std::string& objective,
                 const std::string& assignment_path) {
  const auto s = load_scenario(opt);
  const auto model = build_model(s.problem(), parse_objective(objective));
  std::ifstream in(assignment_path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", assignment_path));
  const auto assignment = read_solution(model, in);
  const auto violated = validate_assignment(model, assignment);
  if (!violated.empty()) {
    fmt::print("{} violated constraints:", violated.size());
    for (const auto& name : violated) fmt::print(" {}", name);
    fmt::print("\n");
    return 1;
  }
  const auto placement = decode_assignment(model, assignment);
  const auto eval = evaluate_placement(s.problem(), placement);
  fmt::print("assignment valid\nplacement: {}\nobjective: {}\ncompletion time: {} ms\n",
             to_string(placement), model.objective_value(assignment.values), eval.completion_time_ms);
  return 0;
}

struct CampaignOptions {
  ModelFiles files;
  std::string campaign = kData + "/campaign.json";
  std::string out = "results";
  std::string format = "csv";
  std::size_t jobs = 0;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
};

int run_campaign_cmd(const CampaignOptions& opt, bool strict) {
  const auto topology = load_topology(read_json_file(opt.files.topology));
  const auto service = load_service(read_json_file(opt.files.service));
  const auto deployment = load_deployment(read_json_file(opt.files.deployment));
  auto campaign = load_campaign(read_json_file(opt.campaign));
  if (opt.seed) campaign.base_seed = *opt.seed;
  if (opt.format != "csv" && opt.format != "jsonl")
    throw ConfigError(fmt::format("unknown format '{}'", opt.format));

  const auto planned = expand_campaign(campaign.groups, campaign.base_seed);
  if (opt.dry_run) {
    fmt::print("{} planned run instances\n", planned.size());
    std::map<int, std::size_t> per_group;
    for (const auto& run : planned) ++per_group[run.group_id];
    for (const auto& g : campaign.groups) {
      auto devices = g.device_load.describe();
      if (!g.load_sweep.empty())
        devices = fmt::format("{} swept over {} levels", g.device_load.kind == LoadDistribution::Kind::Normal
                                                             ? fmt::format("normal(level, {})", g.device_load.stddev_pct)
                                                             : std::string("fixed(level)"),
                              g.load_sweep.size());
      fmt::print("  group {} ({}): {} instances, k = {}, devices {}, links {}\n", g.group_id, g.name,
                 per_group[g.group_id], g.instances_per_function, devices, g.link_load.describe());
    }
    return 0;
  }

  CampaignInputs inputs{topology, service, deployment, campaign};
  const auto records = run_campaign(inputs, opt.jobs > 0 ? opt.jobs : default_parallelism());
  const auto files = emit_results(records, opt.out,
                                  opt.format == "csv" ? RecordFormat::Csv : RecordFormat::JsonLines);
  std::size_t infeasible = 0;
  std::map<int, std::size_t> infeasible_by_group;
  for (const auto& r : records) {
    if (!r.feasible) {
      ++infeasible;
      ++infeasible_by_group[r.group_id];
    }
  }
  fmt::print("{} records written to {} ({} files)\n", records.size(), opt.out, files.size());
  fmt::print("infeasible runs: {}\n", infeasible);
  for (const auto& [group, count] : infeasible_by_group)
    fmt::print("  group {}: {}\n", group, count);
  return strict && infeasible > 0 ? 2 : 0;
}

int run_summarize(const std::string& path, const std::string& by, const std::string& out) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  const bool jsonl = path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl";
  const auto records = jsonl ? read_records_jsonl(in) : read_records_csv(in);
  std::vector<GroupKey> keys;
  std::stringstream list(by);
  for (std::string key; std::getline(list, key, ',');) {
    if (key == "group") keys.push_back(GroupKey::Group);
    else if (key == "level") keys.push_back(GroupKey::LoadLevel);
    else if (key == "objective") keys.push_back(GroupKey::Objective);
    else if (key == "instances") keys.push_back(GroupKey::Instances);
    else throw ConfigError(fmt::format("unknown grouping key '{}'", key));
  }
  const auto rows = summarize(records, keys);
  std::cout << format_summary_table(rows);
  if (!out.empty()) {
    std::ofstream file(out);
    if (!file) throw Error(fmt::format("cannot write '{}'", out));
    write_summary_csv(rows, file);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware microservice request placement"};
  app.require_subcommand(1);
  app.fallthrough();
  bool strict = false;
  app.add_flag("--strict", strict, "Exit with status 2 when any solve is infeasible");

  ScenarioOptions solve_opt;
  auto* solve_cmd = app.add_subcommand("solve", "Place one request under both energy objectives");
  solve_opt.add_to(*solve_cmd);

  CampaignOptions camp_opt;
  auto* camp_cmd = app.add_subcommand("campaign", "Run an evaluation campaign");
  camp_opt.files.add_to(*camp_cmd);
  camp_cmd->add_option("--campaign", camp_opt.campaign, "Campaign document")->capture_default_str();
  camp_cmd->add_option("-o,--out", camp_opt.out, "Output directory")->capture_default_str();
  camp_cmd->add_option("--format", camp_opt.format, "csv | jsonl")->capture_default_str();
  camp_cmd->add_option("-j,--jobs", camp_opt.jobs, "Worker threads (default: DRP_JOBS or cores)");
  camp_cmd->add_option("--seed", camp_opt.seed, "Override the campaign base seed");
  camp_cmd->add_flag("--dry-run", camp_opt.dry_run, "List planned run instances only");

  ScenarioOptions lp_opt;
  std::string lp_objective = "overall";
  std::string lp_out;
  auto* lp_cmd = app.add_subcommand("export-lp", "Write the integer program of a scenario");
  lp_opt.add_to(*lp_cmd);
  lp_cmd->add_option("--objective", lp_objective, "overall | marginal")->capture_default_str();
  lp_cmd->add_option("-o,--out", lp_out, "Output .lp file (default: stdout)");

  ScenarioOptions val_opt;
  std::string val_objective = "overall";
  std::string val_assignment;
  auto* val_cmd = app.add_subcommand("validate", "Check an assignment against a scenario model");
  val_opt.add_to(*val_cmd);
  val_cmd->add_option("--objective", val_objective, "overall | marginal")->capture_default_str();
  val_cmd->add_option("--assignment", val_assignment, "Solution file (name value per line)")
      ->required();

  std::string sum_records;
  std::string sum_by = "group,level,objective";
  std::string sum_out;
  auto* sum_cmd = app.add_subcommand("summarize", "Statistics from a records file");
  sum_cmd->add_option("records", sum_records, "records.csv or records.jsonl")->required();
  sum_cmd->add_option("--by", sum_by, "Grouping keys: group,level,objective,instances")
      ->capture_default_str();
  sum_cmd->add_option("-o,--out", sum_out, "Also write the summary as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return run_solve(solve_opt, strict);
    if (*camp_cmd) return run_campaign_cmd(camp_opt, strict);
    if (*lp_cmd) return run_export_lp(lp_opt, lp_objective, lp_out);
    if (*val_cmd) return run_validate(val_opt, val_objective, val_assignment);
    if (*sum_cmd) return run_summarize(sum_records, sum_by, sum_out);
  } catch (const drp::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
