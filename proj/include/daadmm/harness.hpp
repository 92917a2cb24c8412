#pragma once

#include "daadmm/planning.hpp"
#include "daadmm/scenarios.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace daadmm::harness {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentPlan {
  scenarios::ScenarioConfig config;  // resolved
  std::vector<planning::Method> methods;
  std::vector<double> p_delays;
  std::vector<int> d_maxes;
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::string output_path;
  bool timing = false;  // comp_time is wall-clock, so it is left out of the CSV unless asked for

  /// Throws planning::PlanningError.
  void validate() const;
};

/// Single-cell plan taken from a config's own method, p_delay, d_max, trials and seed.
ExperimentPlan plan_from_config(const scenarios::ScenarioConfig& config);

planning::PlanRequest make_request(const scenarios::ScenarioConfig& config, planning::Method method, double p_delay,
                                   int d_max, std::uint64_t seed);

struct MetricsRow {
  std::string scenario;
  planning::Method method = planning::Method::DA;
  double p_delay = 0.0;
  int d_max = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double makespan = 0.0;
  double total_cost = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double comp_time = 0.0;
  planning::FailureReason failure_reason = planning::FailureReason::None;
  std::uint64_t delay_trace_hash = 0;  // not written
};

using ProgressFn = std::function<void(const MetricsRow&)>;

/// Cells in the order p_delay, d_max, method; trial t uses seed base_seed + t in
/// every cell, so methods see identical delay traces.
std::vector<MetricsRow> run_experiment(const ExperimentPlan& plan, const ProgressFn& progress = {});

std::string csv_header();
std::string to_csv(const std::vector<MetricsRow>& rows, bool timing);
void write_csv(const std::vector<MetricsRow>& rows, const std::string& path, bool timing);

struct CellSummary {
  std::string scenario;
  planning::Method method = planning::Method::DA;
  double p_delay = 0.0;
  int d_max = 0;
  int trials = 0;
  int successes = 0;
  double median_primal = 0.0;

  double success_rate() const { return trials > 0 ? static_cast<double>(successes) / trials : 0.0; }
};

/// One entry per cell in first-appearance order.
std::vector<CellSummary> summarize(const std::vector<MetricsRow>& rows);

}  // namespace daadmm::harness
