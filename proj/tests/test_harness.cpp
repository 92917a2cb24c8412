#include "daadmm/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace daadmm;
using harness::MetricsRow;

namespace {

scenarios::ScenarioConfig small_circle() {
  scenarios::ScenarioConfig c;
  c.n_agents = 2;
  c.radius = 1.0;
  c.horizon = 20;
  c.iterations = 8;
  c.sqp_iters = 2;
  c.resolve();
  return c;
}

harness::ExperimentPlan small_plan() {
  auto plan = harness::plan_from_config(small_circle());
  plan.methods = {planning::Method::DA};
  plan.p_delays = {0.0};
  plan.d_maxes = {1};
  plan.trials = 3;
  plan.base_seed = 11;
  return plan;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto end = text.find("\r\n", pos);
    REQUIRE(end != std::string::npos);
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 2;
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

MetricsRow synthetic_row(int k) {
  MetricsRow r;
  r.scenario = "circle";
  r.method = k % 2 ? planning::Method::FP : planning::Method::DA;
  r.p_delay = 0.2 * (k % 3);
  r.d_max = 1 + k % 2;
  r.trial = k;
  r.seed = 100 + static_cast<std::uint64_t>(k);
  r.success = k % 4 != 0;
  r.makespan = 0.075 * (k + 1);
  r.total_cost = 3.5 + k;
  r.primal_res = 1e-3 * (k % 7);
  r.dual_res = 2e-4 * k;
  r.failure_reason = r.success ? planning::FailureReason::None : planning::FailureReason::Timeout;
  return r;
}

}  // namespace

TEST_CASE("one cell with three trials gives three rows with consecutive seeds") {
  const auto rows = harness::run_experiment(small_plan());
  REQUIRE(rows.size() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(rows[t].trial == t);
    CHECK(rows[t].seed == 11u + static_cast<std::uint64_t>(t));
    CHECK(rows[t].method == planning::Method::DA);
    CHECK(rows[t].scenario == "circle");
  }
}

TEST_CASE("rows are ordered p_delay, d_max, method, trial") {
  auto plan = small_plan();
  plan.methods = {planning::Method::DA, planning::Method::FP};
  plan.p_delays = {0.0, 0.5};
  plan.d_maxes = {1, 2};
  plan.trials = 1;
  const auto rows = harness::run_experiment(plan);
  REQUIRE(rows.size() == 8);
  int idx = 0;
  for (double p : plan.p_delays) {
    for (int d : plan.d_maxes) {
      for (auto m : plan.methods) {
        CHECK(rows[idx].p_delay == p);
        CHECK(rows[idx].d_max == d);
        CHECK(rows[idx].method == m);
        ++idx;
      }
    }
  }
}

TEST_CASE("identical seeds give byte-identical CSV") {
  auto plan = small_plan();
  plan.p_delays = {0.4};
  const auto a = harness::to_csv(harness::run_experiment(plan), false);
  const auto b = harness::to_csv(harness::run_experiment(plan), false);
  CHECK(a == b);
}

TEST_CASE("methods in the same cell share the delay trace") {
  auto plan = small_plan();
  plan.methods = {planning::Method::DA, planning::Method::FP};
  plan.p_delays = {0.5};
  plan.trials = 2;
  const auto rows = harness::run_experiment(plan);
  REQUIRE(rows.size() == 4);
  for (int t = 0; t < 2; ++t) {
    CHECK(rows[t].method == planning::Method::DA);
    CHECK(rows[2 + t].method == planning::Method::FP);
    CHECK(rows[t].delay_trace_hash == rows[2 + t].delay_trace_hash);
  }
  CHECK(rows[0].delay_trace_hash != rows[1].delay_trace_hash);
}

TEST_CASE("empty row set gives the header line only") {
  const auto text = harness::to_csv({}, false);
  CHECK(text == harness::csv_header() + "\r\n");
  CHECK(split_fields(harness::csv_header()).size() == 13);
}

TEST_CASE("CSV round trip preserves fields") {
  std::vector<MetricsRow> rows;
  for (int k = 0; k < 6; ++k) rows.push_back(synthetic_row(k));
  rows[2].scenario = "odd,\"name\"";
  const auto lines = split_lines(harness::to_csv(rows, true));
  REQUIRE(lines.size() == rows.size() + 1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto f = split_fields(lines[k + 1]);
    REQUIRE(f.size() == 13);
    const auto& r = rows[k];
    CHECK(f[0] == r.scenario);
    CHECK(f[1] == planning::to_string(r.method));
    CHECK(std::stod(f[2]) == doctest::Approx(r.p_delay));
    CHECK(std::stoi(f[3]) == r.d_max);
    CHECK(std::stoi(f[4]) == r.trial);
    CHECK(std::stoull(f[5]) == r.seed);
    CHECK(f[6] == (r.success ? "1" : "0"));
    if (r.success) {
      CHECK(std::stod(f[7]) == doctest::Approx(r.makespan));
      CHECK(f[12].empty());
    } else {
      CHECK(f[7].empty());
      CHECK(f[12] == planning::to_string(r.failure_reason));
    }
    CHECK(std::stod(f[8]) == doctest::Approx(r.total_cost));
    CHECK(std::stod(f[9]) == doctest::Approx(r.primal_res));
    CHECK(std::stod(f[10]) == doctest::Approx(r.dual_res));
    CHECK(std::stod(f[11]) == doctest::Approx(r.comp_time));
  }
}

TEST_CASE("comp_time is blank unless timing is requested") {
  auto r = synthetic_row(1);
  r.comp_time = 1.25;
  const auto f = split_fields(split_lines(harness::to_csv({r}, false))[1]);
  CHECK(f[11].empty());
  const auto g = split_fields(split_lines(harness::to_csv({r}, true))[1]);
  CHECK(g[11] == "1.25");
}

TEST_CASE("1000 rows give 1001 lines") {
  std::vector<MetricsRow> rows;
  for (int k = 0; k < 1000; ++k) rows.push_back(synthetic_row(k));
  CHECK(split_lines(harness::to_csv(rows, false)).size() == 1001);
}

TEST_CASE("summarize matches an independent recount") {
  std::vector<MetricsRow> rows;
  for (int k = 0; k < 60; ++k) rows.push_back(synthetic_row(k));
  const auto cells = harness::summarize(rows);

  using Key = std::tuple<int, double, int>;
  std::map<Key, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) groups[{static_cast<int>(r.method), r.p_delay, r.d_max}].push_back(&r);
  REQUIRE(cells.size() == groups.size());
  for (const auto& c : cells) {
    const auto& g = groups.at({static_cast<int>(c.method), c.p_delay, c.d_max});
    CHECK(c.trials == static_cast<int>(g.size()));
    const auto wins = std::count_if(g.begin(), g.end(), [](const MetricsRow* r) { return r->success; });
    CHECK(c.successes == wins);
    std::vector<double> v;
    for (const auto* r : g) v.push_back(r->primal_res);
    std::sort(v.begin(), v.end());
    const double med = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    CHECK(c.median_primal == doctest::Approx(med));
    CHECK(c.success_rate() == doctest::Approx(static_cast<double>(wins) / g.size()));
  }
}

TEST_CASE("a trial that throws becomes a Crash row") {
  auto plan = small_plan();
  plan.trials = 1;
  plan.config.n_neigh = 5;  // more neighbours than other agents
  const auto rows = harness::run_experiment(plan);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].success);
  CHECK(rows[0].failure_reason == planning::FailureReason::Crash);
  const auto f = split_fields(split_lines(harness::to_csv(rows, false))[1]);
  CHECK(f[12] == "Crash");
}

TEST_CASE("write_csv reports unwritable paths") {
  CHECK_THROWS_AS(harness::write_csv({}, "/nonexistent-dir/out.csv", false), harness::IoError);
  const auto path = std::filesystem::temp_directory_path() / "daadmm_test_harness.csv";
  std::vector<MetricsRow> rows = {synthetic_row(3)};
  harness::write_csv(rows, path.string(), false);
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  CHECK(os.str() == harness::to_csv(rows, false));
  std::filesystem::remove(path);
}

TEST_CASE("plan validation") {
  auto plan = small_plan();
  CHECK_NOTHROW(plan.validate());
  auto bad = plan;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), planning::PlanningError);
  bad = plan;
  bad.methods.clear();
  CHECK_THROWS_AS(bad.validate(), planning::PlanningError);
  bad = plan;
  bad.p_delays = {1.5};
  CHECK_THROWS_AS(bad.validate(), planning::PlanningError);
  bad = plan;
  bad.d_maxes = {plan.config.horizon};
  CHECK_THROWS_AS(bad.validate(), planning::PlanningError);
  bad = plan;
  bad.methods = {planning::Method::FCOpt};
  CHECK_THROWS_AS(bad.validate(), planning::PlanningError);
}

TEST_CASE("plan_from_config copies the config's own cell") {
  auto c = small_circle();
  c.method = "fp";
  c.p_delay = 0.3;
  c.d_max = 2;
  c.trials = 4;
  c.seed = 9;
  const auto plan = harness::plan_from_config(c);
  REQUIRE(plan.methods.size() == 1);
  CHECK(plan.methods[0] == planning::Method::FP);
  CHECK(plan.p_delays == std::vector<double>{0.3});
  CHECK(plan.d_maxes == std::vector<int>{2});
  CHECK(plan.trials == 4);
  CHECK(plan.base_seed == 9u);
}
