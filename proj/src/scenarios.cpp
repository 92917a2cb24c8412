#include "daadmm/scenarios.hpp"

#include <json.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace daadmm::scenarios {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double theta) {
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

Eigen::VectorXd planar_state(ModelKind kind, double x, double y, double heading) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(state_dim(kind));
  s[0] = x;
  s[1] = y;
  if (kind == ModelKind::Dubins) s[2] = heading;
  return s;
}

bool inside_inflated(const Box& box, const Eigen::VectorXd& p, double margin) {
  for (Eigen::Index d = 0; d < box.lo.size(); ++d) {
    if (p[d] <= box.lo[d] - margin || p[d] >= box.hi[d] + margin) return false;
  }
  return true;
}

bool slot_taken(const TaskSource& src, int side, int slot, int except) {
  for (std::size_t a = 0; a < src.side.size(); ++a) {
    if (static_cast<int>(a) != except && src.side[a] == side && src.slot[a] == slot) return true;
  }
  return false;
}

}  // namespace

Limits default_limits(ModelKind kind) {
  Limits lim;
  switch (kind) {
    case ModelKind::DoubleIntegrator:
      lim.u_min = Eigen::VectorXd::Constant(2, -2.0);
      lim.u_max = Eigen::VectorXd::Constant(2, 2.0);
      break;
    case ModelKind::Dubins:
      lim.u_min = Eigen::VectorXd::Constant(2, -2.0);
      lim.u_max = Eigen::VectorXd::Constant(2, 2.0);
      lim.state_bounds.push_back({3, 0.0, 2.0});
      break;
    case ModelKind::Drone:
      lim.u_min = Eigen::VectorXd::Constant(6, -3.0);
      lim.u_max = Eigen::VectorXd::Constant(6, 3.0);
      for (int axis = 0; axis < 3; ++axis) lim.state_bounds.push_back({3 + axis, -2.0, 2.0});
      break;
  }
  return lim;
}

void validate(const Scenario& s) {
  const int nx = state_dim(s.model);
  const int dim = s.position_dim();
  if (s.n_agents < 1) throw ScenarioError("scenario needs at least one agent");
  if (static_cast<int>(s.starts.size()) != s.n_agents || static_cast<int>(s.goals.size()) != s.n_agents) {
    throw ScenarioError("starts/goals count differs from n_agents");
  }
  if (!(s.d_safe > 0.0)) throw ScenarioError("d_safe must be positive");
  if (!(s.dt > 0.0)) throw ScenarioError("dt must be positive");
  if (s.horizon < 1) throw ScenarioError("horizon must be at least 1");
  for (int i = 0; i < s.n_agents; ++i) {
    if (s.starts[i].size() != nx || s.goals[i].size() != nx) {
      throw ScenarioError("agent " + std::to_string(i) + " state has wrong dimension");
    }
    if (!s.starts[i].allFinite() || !s.goals[i].allFinite()) {
      throw ScenarioError("agent " + std::to_string(i) + " has a non-finite state");
    }
  }
  for (int i = 0; i < s.n_agents; ++i) {
    for (int j = i + 1; j < s.n_agents; ++j) {
      const double dist = (s.starts[i].head(dim) - s.starts[j].head(dim)).norm();
      if (dist < s.d_safe) {
        throw ScenarioError("starts of agents " + std::to_string(i) + " and " + std::to_string(j) +
                            " are closer than d_safe");
      }
    }
  }
  for (std::size_t o = 0; o < s.obstacles.size(); ++o) {
    const Box& box = s.obstacles[o];
    if (box.lo.size() != dim || box.hi.size() != dim || (box.hi.array() < box.lo.array()).any()) {
      throw ScenarioError("obstacle " + std::to_string(o) + " is malformed");
    }
    for (int i = 0; i < s.n_agents; ++i) {
      if (inside_inflated(box, s.starts[i].head(dim), s.robot_radius())) {
        throw ScenarioError("start of agent " + std::to_string(i) + " lies inside obstacle " + std::to_string(o));
      }
    }
  }
}

Scenario circle_formation(int n, double radius, ModelKind kind, double d_safe, int horizon, double dt) {
  if (n < 2 || n % 2 != 0) throw ScenarioError("circle formation needs an even agent count >= 2");
  if (kind == ModelKind::Drone) throw ScenarioError("circle formation is planar; use drone_scenario");
  if (!(radius > n * d_safe / kPi)) throw ScenarioError("radius too small to place agents d_safe apart");
  Scenario s;
  s.name = "circle";
  s.model = kind;
  s.n_agents = n;
  s.d_safe = d_safe;
  s.horizon = horizon;
  s.dt = dt;
  s.limits = default_limits(kind);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    // Dubins agents face the opposite side of the circle.
    s.starts.push_back(planar_state(kind, radius * std::cos(a), radius * std::sin(a), wrap(a + kPi)));
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd goal = s.starts[(i + n / 2) % n];
    if (kind == ModelKind::Dubins) goal[2] = s.starts[i][2];
    s.goals.push_back(goal);
  }
  validate(s);
  return s;
}

Scenario warehouse(int n, const WarehouseLayout& layout, double d_safe, int horizon, double dt) {
  if (n < 1 || n > layout.slots_per_conveyor) throw ScenarioError("warehouse agent count exceeds conveyor slots");
  Scenario s;
  s.name = "warehouse";
  s.model = ModelKind::Dubins;
  s.n_agents = n;
  s.d_safe = d_safe;
  s.horizon = horizon;
  s.dt = dt;
  s.limits = default_limits(s.model);

  const double w = layout.half_width;
  const double face = w - layout.conveyor_depth;
  const double L = layout.conveyor_half_length;
  s.obstacles.push_back({Eigen::Vector2d(-L, face), Eigen::Vector2d(L, w)});
  s.obstacles.push_back({Eigen::Vector2d(-L, -w), Eigen::Vector2d(L, -face)});

  TaskSource src;
  const int m = layout.slots_per_conveyor;
  const double spacing = m > 1 ? 2.0 * (L - 0.5) / (m - 1) : 0.0;
  const double goal_y = face - layout.slot_standoff;
  for (int k = 0; k < m; ++k) {
    const double x = m > 1 ? -(L - 0.5) + k * spacing : 0.0;
    src.slots[0].push_back(planar_state(s.model, x, goal_y, kPi / 2));
    src.slots[1].push_back(planar_state(s.model, x, -goal_y, -kPi / 2));
  }
  for (int i = 0; i < n; ++i) {
    const double x = (i - 0.5 * (n - 1)) * 1.0;
    s.starts.push_back(planar_state(s.model, x, 0.0, kPi / 2));
    src.side.push_back(0);
    src.slot.push_back(i);
    s.goals.push_back(src.slots[0][i]);
  }
  src.cursor = {n % m, 0};
  s.tasks = std::move(src);
  validate(s);
  return s;
}

Eigen::VectorXd next_task(TaskSource& src, int agent) {
  if (agent < 0 || agent >= static_cast<int>(src.side.size())) throw ScenarioError("unknown agent in next_task");
  const int side = 1 - src.side[agent];
  const int m = static_cast<int>(src.slots[side].size());
  for (int step = 0; step < m; ++step) {
    const int slot = (src.cursor[side] + step) % m;
    if (slot_taken(src, side, slot, agent)) continue;
    src.side[agent] = side;
    src.slot[agent] = slot;
    src.cursor[side] = (slot + 1) % m;
    return src.slots[side][slot];
  }
  throw ScenarioError("no free conveyor slot");
}

Scenario drone_scenario(int n, double radius, double d_safe, int horizon, double dt) {
  if (n < 2 || n % 2 != 0) throw ScenarioError("drone scenario needs an even agent count >= 2");
  Scenario s;
  s.name = "drone";
  s.model = ModelKind::Drone;
  s.n_agents = n;
  s.d_safe = d_safe;
  s.horizon = horizon;
  s.dt = dt;
  s.limits = default_limits(s.model);
  // Starts on a ring above the equator; each goal is the antipode, so the
  // goal ring sits below and rotating by 2*pi/n about z maps agent i to i+1.
  const double elevation = kPi / 6;
  const double ring = radius * std::cos(elevation);
  const double z = radius * std::sin(elevation);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    Eigen::VectorXd start = Eigen::VectorXd::Zero(9);
    start.head(3) << ring * std::cos(a), ring * std::sin(a), z;
    Eigen::VectorXd goal = Eigen::VectorXd::Zero(9);
    goal.head(3) = -start.head(3);
    s.starts.push_back(start);
    s.goals.push_back(goal);
  }
  validate(s);
  return s;
}

void ScenarioConfig::resolve() {
  if (!model) {
    model = scenario == "warehouse" ? "dubins" : scenario == "drone" ? "drone" : "double_integrator";
  }
  if (!n_agents) n_agents = scenario == "warehouse" ? 5 : scenario == "drone" ? 10 : 8;
  if (!mode) mode = (scenario == "circle" && *model == "double_integrator") ? "trajopt" : "mpc";
  if (!radius) radius = (*mode == "trajopt") ? 1.5 : 2.5;
  if (!d_safe) d_safe = scenario == "drone" ? 0.5 : 0.3;
  if (!iterations) iterations = *mode == "trajopt" ? 30 : 10;
  if (!sqp_iters) sqp_iters = *mode == "trajopt" ? 5 : 1;
  if (!n_neigh) n_neigh = *mode == "trajopt" ? *n_agents - 1 : 3;
}

namespace {

using nlohmann::json;

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ScenarioError("key '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ScenarioError("key '" + key + "' must be finite");
  return x;
}

long long as_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ScenarioError("key '" + key + "' must be an integer");
  return v.get<long long>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ScenarioError("key '" + key + "' must be a string");
  return v.get<std::string>();
}

Eigen::VectorXd as_vector(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw ScenarioError("key '" + key + "' must be a non-empty array");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = as_number(v[i], key);
  return out;
}

void require_one_of(const std::string& value, const std::string& key, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (value == o) return;
  }
  throw ScenarioError("key '" + key + "' has unsupported value '" + value + "'");
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("config must be a JSON object");

  ScenarioConfig c;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> keys{
      {"scenario", [&](const json& v, const std::string& k) { c.scenario = as_string(v, k); }},
      {"n_agents", [&](const json& v, const std::string& k) { c.n_agents = static_cast<int>(as_integer(v, k)); }},
      {"radius", [&](const json& v, const std::string& k) { c.radius = as_number(v, k); }},
      {"d_safe", [&](const json& v, const std::string& k) { c.d_safe = as_number(v, k); }},
      {"dt", [&](const json& v, const std::string& k) { c.dt = as_number(v, k); }},
      {"horizon", [&](const json& v, const std::string& k) { c.horizon = static_cast<int>(as_integer(v, k)); }},
      {"model", [&](const json& v, const std::string& k) { c.model = as_string(v, k); }},
      {"seed",
       [&](const json& v, const std::string& k) {
         const long long s = as_integer(v, k);
         if (s < 0) throw ScenarioError("key 'seed' must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"obstacles",
       [&](const json& v, const std::string& k) {
         if (!v.is_array()) throw ScenarioError("key '" + k + "' must be an array");
         for (const auto& item : v) {
           if (!item.is_object() || !item.contains("lo") || !item.contains("hi") || item.size() != 2) {
             throw ScenarioError("key 'obstacles' entries must be {\"lo\": [...], \"hi\": [...]}");
           }
           c.obstacles.push_back({as_vector(item["lo"], "obstacles.lo"), as_vector(item["hi"], "obstacles.hi")});
         }
       }},
      {"method", [&](const json& v, const std::string& k) { c.method = as_string(v, k); }},
      {"p_delay", [&](const json& v, const std::string& k) { c.p_delay = as_number(v, k); }},
      {"d_max", [&](const json& v, const std::string& k) { c.d_max = static_cast<int>(as_integer(v, k)); }},
      {"iterations", [&](const json& v, const std::string& k) { c.iterations = static_cast<int>(as_integer(v, k)); }},
      {"sqp_iters", [&](const json& v, const std::string& k) { c.sqp_iters = static_cast<int>(as_integer(v, k)); }},
      {"mode", [&](const json& v, const std::string& k) { c.mode = as_string(v, k); }},
      {"n_neigh", [&](const json& v, const std::string& k) { c.n_neigh = static_cast<int>(as_integer(v, k)); }},
      {"rho_x", [&](const json& v, const std::string& k) { c.rho_x = as_number(v, k); }},
      {"rho_u", [&](const json& v, const std::string& k) { c.rho_u = as_number(v, k); }},
      {"trials", [&](const json& v, const std::string& k) { c.trials = static_cast<int>(as_integer(v, k)); }},
      {"tasks_per_agent",
       [&](const json& v, const std::string& k) { c.tasks_per_agent = static_cast<int>(as_integer(v, k)); }},
  };
  for (const auto& [key, value] : doc.items()) {
    const auto it = keys.find(key);
    if (it == keys.end()) throw ScenarioError("unknown key '" + key + "'");
    it->second(value, key);
  }

  require_one_of(c.scenario, "scenario", {"circle", "warehouse", "drone"});
  require_one_of(c.method, "method", {"da", "lb", "rb", "fp", "fc"});
  if (c.model) require_one_of(*c.model, "model", {"double_integrator", "dubins", "drone"});
  if (c.mode) require_one_of(*c.mode, "mode", {"trajopt", "mpc"});
  c.resolve();

  if (*c.n_agents < 1) throw ScenarioError("key 'n_agents' must be positive");
  if (!(*c.d_safe > 0.0)) throw ScenarioError("key 'd_safe' must be positive");
  if (!(*c.radius > 0.0)) throw ScenarioError("key 'radius' must be positive");
  if (!(c.dt > 0.0)) throw ScenarioError("key 'dt' must be positive");
  if (c.horizon < 1) throw ScenarioError("key 'horizon' must be positive");
  if (c.p_delay < 0.0 || c.p_delay > 1.0) throw ScenarioError("key 'p_delay' must lie in [0, 1]");
  if (c.d_max < 0 || c.d_max >= c.horizon) throw ScenarioError("key 'd_max' must lie in [0, horizon)");
  if (*c.iterations < 1) throw ScenarioError("key 'iterations' must be positive");
  if (*c.sqp_iters < 1) throw ScenarioError("key 'sqp_iters' must be positive");
  if (*c.n_neigh < 0) throw ScenarioError("key 'n_neigh' must be non-negative");
  if (!(c.rho_x > 0.0) || !(c.rho_u > 0.0)) throw ScenarioError("keys 'rho_x'/'rho_u' must be positive");
  if (c.trials < 1) throw ScenarioError("key 'trials' must be positive");
  if (c.tasks_per_agent < 1) throw ScenarioError("key 'tasks_per_agent' must be positive");
  if (c.scenario == "drone" && *c.model != "drone") throw ScenarioError("key 'model' must be 'drone' for drone");
  if (c.scenario != "drone" && *c.model == "drone") throw ScenarioError("key 'model' 'drone' needs scenario 'drone'");
  return c;
}

Scenario build_scenario(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  c.resolve();
  const ModelKind kind = model_kind_from_string(*c.model);
  Scenario s;
  if (c.scenario == "circle") {
    s = circle_formation(*c.n_agents, *c.radius, kind, *c.d_safe, c.horizon, c.dt);
  } else if (c.scenario == "warehouse") {
    s = warehouse(*c.n_agents, {}, *c.d_safe, c.horizon, c.dt);
    if (kind != ModelKind::Dubins) {
      // Same geometry driven by another planar model.
      s.model = kind;
      s.limits = default_limits(kind);
      auto convert = [&](Eigen::VectorXd& v) { v = planar_state(kind, v[0], v[1], v[2]); };
      for (auto& v : s.starts) convert(v);
      for (auto& v : s.goals) convert(v);
      for (auto& side : s.tasks->slots) {
        for (auto& v : side) convert(v);
      }
    }
  } else {
    s = drone_scenario(*c.n_agents, *c.radius, *c.d_safe, c.horizon, c.dt);
  }
  for (const Box& b : c.obstacles) s.obstacles.push_back(b);
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& text) { return build_scenario(parse_config(text)); }

}  // namespace daadmm::scenarios
