#include "daadmm/consensus_admm.hpp"
#include "daadmm/harness.hpp"
#include "daadmm/planning.hpp"
#include "daadmm/scenarios.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace daadmm;

namespace {

constexpr int kConfigError = 1;
constexpr int kIoError = 2;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw harness::IoError("cannot read '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct RunArgs {
  std::string config;
  std::vector<std::string> methods;
  std::vector<double> p_delays;
  std::vector<int> d_maxes;
  int trials = 0;
  long long seed = -1;
  std::string out;
  bool timing = false;
};

int cmd_run(const RunArgs& a) {
  const auto cfg = scenarios::parse_config(read_file(a.config));
  auto plan = harness::plan_from_config(cfg);
  if (!a.methods.empty()) {
    plan.methods.clear();
    for (const auto& m : a.methods) plan.methods.push_back(planning::method_from_string(m));
  }
  if (!a.p_delays.empty()) plan.p_delays = a.p_delays;
  if (!a.d_maxes.empty()) plan.d_maxes = a.d_maxes;
  if (a.trials > 0) plan.trials = a.trials;
  if (a.seed >= 0) plan.base_seed = static_cast<std::uint64_t>(a.seed);
  plan.output_path = a.out;
  plan.timing = a.timing;
  plan.validate();
  // Scenario errors surface before any trial runs.
  scenarios::build_scenario(plan.config);

  const auto rows = harness::run_experiment(plan, [](const harness::MetricsRow& r) {
    std::fprintf(stderr, "%s p=%g d=%d trial %d: %s\n", planning::to_string(r.method).c_str(), r.p_delay, r.d_max,
                 r.trial, r.success ? "success" : planning::to_string(r.failure_reason).c_str());
  });
  if (plan.output_path.empty()) {
    std::cout << harness::to_csv(rows, plan.timing);
  } else {
    harness::write_csv(rows, plan.output_path, plan.timing);
  }
  for (const auto& c : harness::summarize(rows)) {
    std::fprintf(stderr, "%-4s p=%-4g d=%d  %d/%d  median primal %.4g\n", planning::to_string(c.method).c_str(),
                 c.p_delay, c.d_max, c.successes, c.trials, c.median_primal);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const auto cfg = scenarios::parse_config(read_file(path));
  const auto plan = harness::plan_from_config(cfg);
  plan.validate();
  const auto s = scenarios::build_scenario(plan.config);
  std::printf("ok: %s, %d agents, %s model, mode %s\n", s.name.c_str(), s.n_agents, to_string(s.model).c_str(),
              plan.config.mode->c_str());
  return 0;
}

int cmd_demo(const std::string& scenario, const std::string& method, double p_delay, int d_max, std::uint64_t seed) {
  if (scenario != "circle2d") throw planning::PlanningError("unknown demo scenario '" + scenario + "'");
  scenarios::ScenarioConfig cfg;
  cfg.resolve();
  auto req = harness::make_request(cfg, planning::method_from_string(method), p_delay, d_max, seed);
  const auto problem = planning::make_trajopt_problem(req);
  admm::AdmmOptions opt;
  opt.iterations = req.iterations;
  opt.sqp_iters = req.sqp_iters;
  opt.early_stop = false;
  std::mt19937_64 rng(seed);
  const auto res = admm::run_admm(problem, planning::strategy_for(req), req.delay, opt, rng);
  std::printf("%-5s %-12s %-12s %-10s %-10s\n", "iter", "primal", "dual", "rho_min", "rho_max");
  for (std::size_t t = 0; t < res.history.size(); ++t) {
    const auto& pen = res.penalties[t].rho;
    const auto [lo, hi] = std::minmax_element(pen.begin(), pen.end());
    std::printf("%-5zu %-12.5g %-12.5g %-10.4g %-10.4g\n", t + 1, res.history[t].primal, res.history[t].dual, *lo, *hi);
  }
  std::printf("status %s, eps_pri %.4g\n", admm::to_string(res.status).c_str(), res.eps_pri);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-aware consensus ADMM experiments"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep and write CSV");
  run_cmd->add_option("--config", run.config, "Scenario/experiment JSON file")->required();
  run_cmd->add_option("--method", run.methods, "da, lb, rb, fp or fc (comma separated)")->delimiter(',');
  run_cmd->add_option("--p-delay", run.p_delays, "Delay probabilities (comma separated)")->delimiter(',');
  run_cmd->add_option("--d-max", run.d_maxes, "Maximum delays (comma separated)")->delimiter(',');
  run_cmd->add_option("--trials", run.trials, "Trials per cell")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Base seed")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--out", run.out, "CSV path (stdout if omitted)");
  run_cmd->add_flag("--timing", run.timing, "Record solve wall-clock time in comp_time");

  auto* scen_cmd = app.add_subcommand("scenario", "Scenario utilities");
  scen_cmd->require_subcommand(1);
  std::string validate_path;
  auto* validate_cmd = scen_cmd->add_subcommand("validate", "Check a config file");
  validate_cmd->add_option("file", validate_path)->required();

  std::string demo_scenario = "circle2d", demo_method = "da";
  double demo_p = 0.0;
  int demo_d = 1;
  std::uint64_t demo_seed = 0;
  auto* demo_cmd = app.add_subcommand("demo", "Print a per-iteration residual table");
  demo_cmd->add_option("--scenario", demo_scenario);
  demo_cmd->add_option("--method", demo_method);
  demo_cmd->add_option("--p-delay", demo_p);
  demo_cmd->add_option("--d-max", demo_d);
  demo_cmd->add_option("--seed", demo_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*validate_cmd) return cmd_validate(validate_path);
    if (*demo_cmd) return cmd_demo(demo_scenario, demo_method, demo_p, demo_d, demo_seed);
  } catch (const harness::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  }
  return 0;
}
