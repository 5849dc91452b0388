// Command line front end: generate, run, sweep, summarize.
//
// Exit status: 0 every run ok, 2 some runs failed, 1 bad configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jdpo/experiment.hpp"
#include "jdpo/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::vector<double> thetas;
  std::vector<std::string> algorithms;
  std::optional<double> epsilon;
  std::string out;
};

void AddOverrideFlags(CLI::App* cmd, Overrides* o) {
  cmd->add_option("--seed", o->seeds, "Seed list")->delimiter(',');
  cmd->add_option("--theta", o->thetas, "Balancing factor list")->delimiter(',');
  cmd->add_option("--algorithms", o->algorithms, "puf, apuf, ccp, df, oracle")->delimiter(',');
  cmd->add_option("--epsilon", o->epsilon, "Bound gap for termination");
  cmd->add_option("--out", o->out, "Output directory");
}

void Apply(const Overrides& o, jdpo::ExperimentPlan* plan) {
  if (!o.seeds.empty()) plan->seeds = o.seeds;
  if (!o.thetas.empty()) plan->thetas = o.thetas;
  if (!o.algorithms.empty()) {
    plan->algorithms.clear();
    for (const std::string& a : o.algorithms) plan->algorithms.push_back(jdpo::ParseAlgorithm(a));
  }
  if (o.epsilon) plan->epsilon = *o.epsilon;
  if (!o.out.empty()) plan->output_dir = o.out;
}

int Execute(const jdpo::ExperimentPlan& plan) {
  plan.Validate();
  const int workers = jdpo::WorkerCountFromEnv();
  const jdpo::PlanOutcome outcome = jdpo::RunPlan(plan, workers);
  std::cout << outcome.records.size() << " runs, " << outcome.failures << " failed, results in "
            << (std::filesystem::path(plan.output_dir) / "results.csv").string() << "\n";
  return outcome.failures ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint delay and power optimization for cache-enabled small cells"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a random scenario as JSON");
  std::string gen_plan, gen_out, gen_preset = "desk_tiny";
  int gen_sbs = 3, gen_users = 4, gen_files = 5;
  std::uint64_t gen_seed = 1;
  gen->add_option("--plan", gen_plan, "Take the generator settings from this plan");
  gen->add_option("--preset", gen_preset, "desk_tiny or default")->check(CLI::IsMember({"desk_tiny", "default"}));
  gen->add_option("--sbs", gen_sbs, "Number of SBSs")->check(CLI::PositiveNumber);
  gen->add_option("--users", gen_users, "Number of users")->check(CLI::PositiveNumber);
  gen->add_option("--files", gen_files, "Number of files")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Scenario file (stdout if omitted)");

  // run
  auto* run = app.add_subcommand("run", "Execute a plan file");
  std::string run_plan;
  Overrides run_over;
  run->add_option("plan", run_plan, "Plan JSON")->required();
  AddOverrideFlags(run, &run_over);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Sweep one axis on desk-scale instances");
  std::string sweep_axis = "theta", sweep_save;
  std::vector<double> sweep_values;
  int sweep_sbs = 3, sweep_users = 4, sweep_files = 5;
  bool sweep_norm = false;
  Overrides sweep_over;
  sweep->add_option("--axis", sweep_axis, "none, theta, cache, density, preference_q");
  sweep->add_option("--values", sweep_values, "Axis values, strictly increasing")->delimiter(',');
  sweep->add_option("--sbs", sweep_sbs, "Number of SBSs")->check(CLI::PositiveNumber);
  sweep->add_option("--users", sweep_users, "Number of users")->check(CLI::PositiveNumber);
  sweep->add_option("--files", sweep_files, "Number of files")->check(CLI::PositiveNumber);
  sweep->add_flag("--auto-normalize", sweep_norm, "Normalize weights at the CCP solution");
  sweep->add_option("--save-plan", sweep_save, "Also write the generated plan here");
  AddOverrideFlags(sweep, &sweep_over);

  // summarize
  auto* sum = app.add_subcommand("summarize", "Aggregate results.csv over seeds");
  std::string sum_in, sum_out;
  sum->add_option("results", sum_in, "results.csv")->required()->check(CLI::ExistingFile);
  sum->add_option("--out", sum_out, "Summary file (summary.csv next to the input if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      jdpo::GenerationConfig config;
      if (!gen_plan.empty()) {
        const jdpo::ExperimentPlan plan = jdpo::LoadPlan(gen_plan);
        if (!plan.scenario_config) throw jdpo::PlanError(gen_plan + ": plan has no scenario_config");
        config = *plan.scenario_config;
      } else if (gen_preset == "desk_tiny") {
        config = jdpo::DeskTinyConfig(gen_sbs, gen_users, gen_files);
      } else {
        config.num_sbs = gen_sbs;
        config.num_users = gen_users;
        config.num_files = gen_files;
      }
      config.seed = gen_seed;
      const std::string text = jdpo::ScenarioToJson(jdpo::GenerateScenario(config));
      if (gen_out.empty()) {
        std::cout << text << "\n";
      } else {
        std::ofstream out(gen_out);
        if (!out) throw jdpo::PlanError(gen_out + ": cannot write");
        out << text << "\n";
      }
      return kExitOk;
    }
    if (*run) {
      jdpo::ExperimentPlan plan = jdpo::LoadPlan(run_plan);
      Apply(run_over, &plan);
      return Execute(plan);
    }
    if (*sweep) {
      jdpo::ExperimentPlan plan;
      plan.scenario_config = jdpo::DeskTinyConfig(sweep_sbs, sweep_users, sweep_files);
      plan.axis = jdpo::ParseSweepAxis(sweep_axis);
      plan.axis_values = sweep_values;
      plan.auto_normalize = sweep_norm;
      plan.algorithms = {jdpo::Algorithm::kPuf, jdpo::Algorithm::kCcp};
      Apply(sweep_over, &plan);
      plan.Validate();
      if (!sweep_save.empty()) jdpo::SavePlan(plan, sweep_save);
      return Execute(plan);
    }
    if (*sum) {
      std::ifstream in(sum_in);
      const std::vector<jdpo::SummaryRow> rows = jdpo::Summarize(jdpo::ReadResultsCsv(in));
      const std::string path =
          sum_out.empty() ? (std::filesystem::path(sum_in).parent_path() / "summary.csv").string() : sum_out;
      std::ofstream out(path);
      if (!out) throw jdpo::PlanError(path + ": cannot write");
      jdpo::WriteSummaryCsv(out, rows);
      std::cout << rows.size() << " summary rows in " << path << "\n";
      return kExitOk;
    }
  } catch (const jdpo::PlanError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
