#pragma once

#include "daadmm/trajectory.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace daadmm::scenarios {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned rectangle (2D) or box (3D).
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct StateBound {
  int index;
  double lo;
  double hi;
};

struct Limits {
  Eigen::VectorXd u_min;
  Eigen::VectorXd u_max;
  std::vector<StateBound> state_bounds;
};

Limits default_limits(ModelKind kind);

/// Conveyor goal slots for continuous tasking. Side 0 is conveyor A, side 1
/// conveyor B.
struct TaskSource {
  std::array<std::vector<Eigen::VectorXd>, 2> slots;  // goal states per side
  std::vector<int> side;                              // current goal side per agent
  std::vector<int> slot;                              // current slot per agent
  std::array<int, 2> cursor{0, 0};                    // round-robin position per side
};

struct Scenario {
  std::string name;
  ModelKind model = ModelKind::DoubleIntegrator;
  int n_agents = 0;
  std::vector<Eigen::VectorXd> starts;
  std::vector<Eigen::VectorXd> goals;
  std::vector<Box> obstacles;
  double d_safe = 0.3;
  int horizon = 40;
  double dt = 0.075;
  Limits limits;
  std::optional<TaskSource> tasks;

  int position_dim() const { return daadmm::position_dim(model); }
  double robot_radius() const { return 0.5 * d_safe; }
};

/// Throws ScenarioError if starts overlap, dimensions disagree, or a start
/// lies inside an (inflated) obstacle.
void validate(const Scenario& scenario);

Scenario circle_formation(int n, double radius, ModelKind kind, double d_safe = 0.3, int horizon = 40,
                          double dt = 0.075);

struct WarehouseLayout {
  double half_width = 4.0;      // workspace is [-w, w]^2
  double conveyor_depth = 0.5;  // conveyors hug the +y and -y walls
  double conveyor_half_length = 3.0;
  int slots_per_conveyor = 6;
  double slot_standoff = 0.35;  // goal distance from the conveyor face
};

Scenario warehouse(int n, const WarehouseLayout& layout = {}, double d_safe = 0.3, int horizon = 40,
                   double dt = 0.075);

/// Assigns a free slot on the conveyor opposite the agent's current goal and
/// flips its side. Slots are handed out round-robin and never shared.
Eigen::VectorXd next_task(TaskSource& source, int agent);

Scenario drone_scenario(int n, double radius = 2.5, double d_safe = 0.5, int horizon = 40, double dt = 0.075);

/// Every key accepted by a scenario/experiment config file, with defaults.
/// Fields left unset take scenario-dependent defaults in `resolve`.
struct ScenarioConfig {
  std::string scenario = "circle";
  std::optional<int> n_agents;
  std::optional<double> radius;
  std::optional<double> d_safe;
  double dt = 0.075;
  int horizon = 40;
  std::optional<std::string> model;
  std::uint64_t seed = 0;
  std::vector<Box> obstacles;
  std::string method = "da";
  double p_delay = 0.0;
  int d_max = 1;
  std::optional<int> iterations;
  std::optional<int> sqp_iters;
  std::optional<std::string> mode;
  std::optional<int> n_neigh;
  double rho_x = 0.1;
  double rho_u = 0.001;
  int trials = 1;
  int tasks_per_agent = 2;

  /// Fills scenario-dependent defaults.
  void resolve();
};

/// Parses a JSON config document; unknown keys and malformed values raise
/// ScenarioError naming the key (or the parse position).
ScenarioConfig parse_config(const std::string& text);

Scenario build_scenario(const ScenarioConfig& config);

/// parse_config + build_scenario + validate.
Scenario load_scenario(const std::string& text);

}  // namespace daadmm::scenarios
