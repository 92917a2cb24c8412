#include "daadmm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace daadmm::harness {

using planning::PlanningError;

void ExperimentPlan::validate() const {
  if (trials < 1) throw PlanningError("trials must be at least 1");
  if (methods.empty()) throw PlanningError("no methods selected");
  if (p_delays.empty() || d_maxes.empty()) throw PlanningError("empty delay sweep");
  const int K = config.horizon;
  for (double p : p_delays) {
    if (!(p >= 0.0 && p <= 1.0)) throw PlanningError("p_delay must lie in [0, 1]");
  }
  for (int d : d_maxes) {
    if (d < 0 || d >= K) throw PlanningError("d_max must lie in [0, horizon)");
  }
  const bool trajopt = config.mode && *config.mode == "trajopt";
  for (auto m : methods) {
    if (m == planning::Method::FCOpt && trajopt) throw PlanningError("fc-opt runs in mpc mode only");
  }
}

ExperimentPlan plan_from_config(const scenarios::ScenarioConfig& config) {
  ExperimentPlan plan;
  plan.config = config;
  plan.config.resolve();
  plan.methods = {planning::method_from_string(plan.config.method)};
  plan.p_delays = {plan.config.p_delay};
  plan.d_maxes = {plan.config.d_max};
  plan.trials = plan.config.trials;
  plan.base_seed = plan.config.seed;
  return plan;
}

planning::PlanRequest make_request(const scenarios::ScenarioConfig& config, planning::Method method, double p_delay,
                                   int d_max, std::uint64_t seed) {
  scenarios::ScenarioConfig c = config;
  c.resolve();
  planning::PlanRequest r;
  r.scenario = scenarios::build_scenario(c);
  r.method = method;
  r.mode = planning::mode_from_string(*c.mode);
  r.delay = delay::DelayConfig{p_delay, d_max, seed};
  r.iterations = *c.iterations;
  r.sqp_iters = *c.sqp_iters;
  r.seed = seed;
  r.n_neigh = *c.n_neigh;
  r.rho_x = c.rho_x;
  r.rho_u = c.rho_u;
  r.tasks_per_agent = r.scenario.tasks ? c.tasks_per_agent : 1;
  return r;
}

std::vector<MetricsRow> run_experiment(const ExperimentPlan& plan, const ProgressFn& progress) {
  plan.validate();
  std::vector<MetricsRow> rows;
  for (double p : plan.p_delays) {
    for (int d : plan.d_maxes) {
      for (auto m : plan.methods) {
        for (int t = 0; t < plan.trials; ++t) {
          MetricsRow row;
          row.scenario = plan.config.scenario;
          row.method = m;
          row.p_delay = p;
          row.d_max = d;
          row.trial = t;
          row.seed = plan.base_seed + static_cast<std::uint64_t>(t);
          try {
            const auto req = make_request(plan.config, m, p, d, row.seed);
            const auto res = planning::run_trial(req);
            row.success = res.success;
            row.makespan = res.makespan;
            row.total_cost = res.total_cost;
            row.primal_res = res.final_primal;
            row.dual_res = res.final_dual;
            row.comp_time = res.comp_time;
            row.failure_reason = res.failure_reason;
            row.delay_trace_hash = res.delay_trace_hash;
          } catch (const std::exception&) {
            row.success = false;
            row.failure_reason = planning::FailureReason::Crash;
          }
          if (progress) progress(row);
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string csv_header() {
  return "scenario,method,p_delay,d_max,trial,seed,success,makespan,total_cost,primal_res,dual_res,comp_time,"
         "failure_reason";
}

std::string to_csv(const std::vector<MetricsRow>& rows, bool timing) {
  std::ostringstream os;
  os << csv_header() << "\r\n";
  for (const auto& r : rows) {
    os << field(r.scenario) << ',' << planning::to_string(r.method) << ',' << num(r.p_delay) << ',' << r.d_max << ','
       << r.trial << ',' << r.seed << ',' << (r.success ? 1 : 0) << ',' << (r.success ? num(r.makespan) : "") << ','
       << (r.failure_reason == planning::FailureReason::Crash ? "" : num(r.total_cost)) << ','
       << num(r.primal_res) << ',' << num(r.dual_res) << ',' << (timing ? num(r.comp_time) : "") << ','
       << field(r.success ? "" : planning::to_string(r.failure_reason)) << "\r\n";
  }
  return os.str();
}

void write_csv(const std::vector<MetricsRow>& rows, const std::string& path, bool timing) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << to_csv(rows, timing);
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

std::vector<CellSummary> summarize(const std::vector<MetricsRow>& rows) {
  std::vector<CellSummary> cells;
  std::vector<std::vector<double>> primals;
  for (const auto& r : rows) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSummary& c) {
      return c.scenario == r.scenario && c.method == r.method && c.p_delay == r.p_delay && c.d_max == r.d_max;
    });
    if (it == cells.end()) {
      cells.push_back(CellSummary{r.scenario, r.method, r.p_delay, r.d_max, 0, 0, 0.0});
      primals.emplace_back();
      it = cells.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - cells.begin());
    ++it->trials;
    if (r.success) ++it->successes;
    if (std::isfinite(r.primal_res)) primals[idx].push_back(r.primal_res);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& v = primals[i];
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    cells[i].median_primal = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  }
  return cells;
}

}  // namespace daadmm::harness
