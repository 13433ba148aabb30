#include "percept/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "percept/controller.hpp"
#include "percept/planner.hpp"
#include "percept/scenario.hpp"
#include "percept/trace.hpp"

namespace percept
{
namespace
{
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnfinished = 2;

void add_common(CLI::App* cmd, RunOptions& opts)
{
  cmd->add_option("--scenario", opts.scenario, "Scenario JSON file")->required();
  cmd->add_option("--seed", opts.seed, "Master seed (default: PERCEPT_SEED, then the scenario)");
  cmd->add_option("--budget", opts.budget, "Per-step time budget T in simulated ms")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epsilon", opts.epsilon, "Knapsack approximation epsilon; 0 for exact");
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--trace-level", opts.trace_level, "0: trace and report, 1: + candidates and plans, 2: + net snapshots")
      ->check(CLI::Range(0, 2));
}

/// Scenario with command-line overrides applied.
Scenario prepare(const RunOptions& opts)
{
  Scenario s = load_scenario(opts.scenario);
  if (opts.seed)
  {
    s.control.seed = *opts.seed;
  }
  else if (const char* env = std::getenv("PERCEPT_SEED"); env && *env)
  {
    size_t used = 0;
    unsigned long long v = 0;
    try
    {
      v = std::stoull(env, &used);
    }
    catch (const std::exception&)
    {
      used = 0;
    }
    if (used == 0 || env[used] != '\0')
    {
      throw std::invalid_argument(std::string("PERCEPT_SEED is not an unsigned integer: '") + env + "'");
    }
    s.control.seed = v;
  }
  if (opts.budget)
  {
    s.control.budget_T = *opts.budget;
  }
  if (opts.epsilon)
  {
    s.control.epsilon = *opts.epsilon;
  }
  s.control.validate();
  return s;
}

void write_file(const fs::path& path, const std::string& text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
  {
    throw std::runtime_error("cannot write " + path.string());
  }
  f << text;
}

double goal_belief(const Report& report)
{
  if (!report.goal_node)
  {
    return 0.0;
  }
  const auto& row = report.final_beliefs.at(to_string(*report.goal_node));
  double best = 0.0;
  for (const auto& [label, p] : row)
  {
    best = std::max(best, p);
  }
  return best;
}

int cmd_run(const RunOptions& opts, std::ostream& out)
{
  const Scenario scenario = prepare(opts);
  Controller controller(scenario);
  const Report report = controller.run();

  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  std::ostringstream trace;
  write_trace(trace, trace_rows(report.steps));
  write_file(dir / "trace.tsv", trace.str());
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  if (opts.trace_level >= 1)
  {
    std::ostringstream cands;
    write_candidates(cands, report.steps);
    write_file(dir / "candidates.tsv", cands.str());
    write_file(dir / "plans.json", plans_to_json(recorded_plans(report.steps)).dump(2) + "\n");
  }
  if (opts.trace_level >= 2)
  {
    std::string lines;
    for (const auto& rec : report.steps)
    {
      lines += Json{{"step", rec.step}, {"net", rec.beliefs_after}}.dump() + "\n";
    }
    write_file(dir / "beliefs.jsonl", lines);
  }

  out << to_string(report.status) << " after " << report.steps.size() << " steps, simulated time "
      << report.simulated_time << " ms";
  if (report.goal_node)
  {
    out << ", " << to_string(*report.goal_node) << " = " << report.winner << " (" << format_number(goal_belief(report))
        << ")";
  }
  out << "\n";
  return report.status == RunStatus::kTerminated ? kExitOk : kExitUnfinished;
}

int cmd_sweep(const RunOptions& opts, const std::vector<int64_t>& budgets, std::ostream& out, std::ostream& err)
{
  if (budgets.empty())
  {
    err << "error: sweep needs at least one budget\n";
    return kExitError;
  }
  for (size_t i = 1; i < budgets.size(); ++i)
  {
    if (budgets[i] <= budgets[i - 1])
    {
      err << "error: sweep budgets must be strictly increasing\n";
      return kExitError;
    }
  }
  std::ostringstream table;
  table << "budget\tstatus\tsteps\tgoal_belief\tsimulated_time\n";
  std::optional<int64_t> minimum;
  for (int64_t budget : budgets)
  {
    RunOptions one = opts;
    one.budget = budget;
    const Scenario scenario = prepare(one);
    Controller controller(scenario);
    const Report report = controller.run();
    table << budget << '\t' << to_string(report.status) << '\t' << report.steps.size() << '\t'
          << format_number(goal_belief(report)) << '\t' << report.simulated_time << '\n';
    if (report.status == RunStatus::kTerminated && !minimum)
    {
      minimum = budget;
    }
  }
  table << "minimum_budget\t" << (minimum ? std::to_string(*minimum) : "none") << '\n';
  out << table.str();
  if (opts.out_dir != ".")
  {
    fs::create_directories(opts.out_dir);
    write_file(fs::path(opts.out_dir) / "sweep.tsv", table.str());
  }
  return minimum ? kExitOk : kExitUnfinished;
}

int cmd_knapsack(const std::string& path, std::optional<double> epsilon, std::optional<int64_t> budget,
                 std::ostream& out)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw std::runtime_error("cannot open " + path);
  }
  KnapsackInstance inst = KnapsackInstance::from_json(Json::parse(in));
  if (budget)
  {
    inst.budget = *budget;
  }
  const Plan plan = epsilon && *epsilon > 0.0 ? solve_approx(inst, *epsilon) : solve_exact(inst);
  out << plan.to_json().dump(2) << "\n";
  return kExitOk;
}

int cmd_validate(const RunOptions& opts, std::ostream& out)
{
  const Scenario s = prepare(opts);
  out << "ok: " << s.models.nodes().size() << " models, " << s.models.groups().size() << " groups, "
      << s.models.templates().size() << " action templates, " << s.world.entities.size() << " entities\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Utility-guided hierarchical recognition engine"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run a scenario to termination");
  add_common(run, run_opts);

  RunOptions sweep_opts;
  std::vector<int64_t> budgets;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario once per budget");
  add_common(sweep, sweep_opts);
  sweep->add_option("budgets", budgets, "Strictly increasing per-step budgets");

  std::string instance;
  std::optional<double> knap_epsilon;
  std::optional<int64_t> knap_budget;
  bool exact = false;
  auto* knapsack = app.add_subcommand("knapsack", "Solve a knapsack instance and print the plan");
  knapsack->add_option("instance", instance, "Instance JSON {budget_T, items:[{id, value, cost}]}")->required();
  auto* eps_opt = knapsack->add_option("--epsilon", knap_epsilon, "Approximation epsilon in (0, 1)");
  knapsack->add_flag("--exact", exact, "Use the exact solver")->excludes(eps_opt);
  knapsack->add_option("--budget", knap_budget, "Override budget_T")->check(CLI::NonNegativeNumber);

  RunOptions validate_opts;
  auto* validate = app.add_subcommand("validate", "Load and check a scenario");
  add_common(validate, validate_opts);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try
  {
    if (*run)
    {
      return cmd_run(run_opts, out);
    }
    if (*sweep)
    {
      return cmd_sweep(sweep_opts, budgets, out, err);
    }
    if (*knapsack)
    {
      return cmd_knapsack(instance, exact ? std::nullopt : knap_epsilon, knap_budget, out);
    }
    return cmd_validate(validate_opts, out);
  }
  catch (const std::exception& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace percept
