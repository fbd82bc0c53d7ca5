#include <doctest.h>

#include <climits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cegal/config.hpp"
#include "cegal/run.hpp"
#include "cegal/solve.hpp"

using namespace cegal;

TEST_CASE("the default eight by eight map gates the diagonal ridge") {
  const GridConfig g = default_grid(8, 2);
  CHECK(g.side == 8);
  CHECK(g.n_agents == 2);
  CHECK(g.init_cell == 0);
  CHECK(g.goal_cells == std::vector<int>{63});
  CHECK(g.move_success_prob == 0.5);
  CHECK(g.unsafe_cells == std::vector<int>{26, 19, 53, 46});
  REQUIRE(g.cell_rewards.size() == 64);
  CHECK(g.cell_rewards[0] == 0.0);
  CHECK(g.cell_rewards[63] == 1.0);
  CHECK(g.cell_rewards[7] == doctest::Approx(0.15));          // (0,7) gradient
  CHECK(g.cell_rewards[9] == doctest::Approx(0.3 * 2 / 14.0 + 0.45));
  for (int c : g.unsafe_cells) CHECK(g.cell_rewards[c] == -0.08);
}

TEST_CASE("small default maps drop gates that do not fit") {
  const GridConfig three = default_grid(3, 1);
  CHECK(three.unsafe_cells == std::vector<int>{7, 5});
  CHECK(three.goal_cells == std::vector<int>{8});
  CHECK(three.cell_rewards.size() == 9);

  const GridConfig two = default_grid(2, 1);
  CHECK(two.unsafe_cells.empty());

  CHECK_THROWS_AS(default_grid(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(default_grid(8, 0), std::invalid_argument);
}

TEST_CASE("the stock configuration carries the documented defaults") {
  const ExperimentConfig c = default_config();
  CHECK(c.grid.side == 8);
  CHECK(c.grid.n_agents == 2);
  CHECK(c.learner.epsilon == 10.0);
  CHECK(c.learner.sigma == 1e-5);
  CHECK(c.learner.alpha == 0.5);
  CHECK(c.learner.discount == 0.99);
  CHECK(c.learner.max_iter == 200);
  CHECK(c.demos.count == 100);
  CHECK(c.demos.horizon == 0);
  CHECK(c.demos.seed == 1);
  CHECK(c.property == "P<=0.25 [ true U<=4096 \"unsafe\" ]");
  CHECK(c.rule_file == "safe");
}

TEST_CASE("spec and learner parameter conversion copy every field") {
  const ExperimentConfig c = default_config();
  const GridWorldSpec spec = to_spec(c.grid);
  CHECK(spec.side == c.grid.side);
  CHECK(spec.n_agents == c.grid.n_agents);
  CHECK(spec.unsafe_cells == c.grid.unsafe_cells);
  CHECK(spec.goal_cells == c.grid.goal_cells);
  CHECK(spec.init_cell == c.grid.init_cell);
  CHECK(spec.cell_rewards == c.grid.cell_rewards);
  CHECK(spec.move_success_prob == c.grid.move_success_prob);

  const CegalParams p = to_cegal_params(c.learner);
  CHECK(p.epsilon == c.learner.epsilon);
  CHECK(p.sigma == c.learner.sigma);
  CHECK(p.alpha == c.learner.alpha);
  CHECK(p.max_iter == c.learner.max_iter);
  CHECK(p.max_evidences == c.learner.max_evidences);
}

TEST_CASE("the demo horizon tracks the discounted tail") {
  ExperimentConfig c = default_config();
  CHECK(demo_horizon(c) == mc_horizon(0.99));
  CHECK(demo_horizon(c) == 1375);
  c.demos.horizon = 77;
  CHECK(demo_horizon(c) == 77);
}

TEST_CASE("configurations survive the JSON round trip") {
  ExperimentConfig c = default_config();
  c.learner.epsilon = 3.5;
  c.demos.seed = 99;
  c.rule_file = "expert";
  const std::string text = config_to_json(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.learner.epsilon == 3.5);
  CHECK(back.demos.seed == 99);
  CHECK(back.rule_file == "expert");
}

TEST_CASE("sparse configurations inherit the regenerated default map") {
  const ExperimentConfig c =
      parse_config(R"({"grid": {"side": 3, "n_agents": 1}})");
  CHECK(c.grid.side == 3);
  CHECK(c.grid.n_agents == 1);
  CHECK(c.grid.unsafe_cells == std::vector<int>{7, 5});
  CHECK(c.grid.goal_cells == std::vector<int>{8});
  CHECK(c.grid.cell_rewards.size() == 9);
  CHECK(c.learner.epsilon == 10.0);  // untouched sections keep defaults

  const ExperimentConfig d = parse_config(R"({"learner": {"epsilon": 5}})");
  CHECK(d.learner.epsilon == 5.0);
  CHECK(d.learner.sigma == 1e-5);
  CHECK(d.grid.side == 8);

  CHECK_THROWS(parse_config("this is not json"));
  CHECK_THROWS_AS(parse_config("[1, 2, 3]"), std::invalid_argument);
}

TEST_CASE("dotted overrides edit or create nested fields") {
  const std::string base = "{}";
  const std::string once = apply_override(base, "learner.epsilon=5");
  const ExperimentConfig c = parse_config(once);
  CHECK(c.learner.epsilon == 5.0);

  const std::string twice = apply_override(once, "grid.side=3");
  const ExperimentConfig d = parse_config(twice);
  CHECK(d.grid.side == 3);
  CHECK(d.grid.unsafe_cells == std::vector<int>{7, 5});
  CHECK(d.learner.epsilon == 5.0);

  // Unquoted strings pass through verbatim; quoted JSON parses as JSON.
  const ExperimentConfig e =
      parse_config(apply_override(base, "rule_file=expert"));
  CHECK(e.rule_file == "expert");
  const ExperimentConfig f =
      parse_config(apply_override(base, "demos.seed=42"));
  CHECK(f.demos.seed == 42);

  CHECK_THROWS_AS(apply_override(base, "no_equals_sign"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_override(base, "=5"), std::invalid_argument);
  CHECK_THROWS_AS(apply_override(base, "a..b=5"), std::invalid_argument);
}

TEST_CASE("the workbench assembles game, features, property and expert") {
  const ExperimentConfig c =
      parse_config(R"({"grid": {"side": 3, "n_agents": 1},
                       "property": "P<=0.25 [ true U<=64 \"unsafe\" ]"})");
  const Workbench wb = make_workbench(c);
  CHECK(wb.game.n_states == 9);
  CHECK(wb.game.n_actions == 5);
  CHECK(wb.game.discount == 0.99);
  CHECK(wb.features.dim() == 9);
  CHECK(wb.ground_truth == joint_ground_truth_reward(wb.spec));
  CHECK(property_hops(wb) == 64);

  const auto vi = value_iteration(wb.game, wb.ground_truth);
  CHECK(wb.expert.rows == vi.rule.rows);
}

TEST_CASE("unbounded properties report an unbounded hop count") {
  const ExperimentConfig c =
      parse_config(R"({"grid": {"side": 3, "n_agents": 1},
                       "property": "P<=0.1 [ true U \"unsafe\" ]"})");
  CHECK(property_hops(make_workbench(c)) == LONG_MAX);
}

TEST_CASE("expected return is the reward-weighted occupancy") {
  const ExperimentConfig c =
      parse_config(R"({"grid": {"side": 3, "n_agents": 1},
                       "learner": {"discount": 0.5}})");
  const Workbench wb = make_workbench(c);

  // Sitting at the start cell forever collects its reward as a geometric
  // series; the start cell of the default map pays zero.
  const DecisionRule sit = DecisionRule::deterministic(std::vector<int>(9, 0));
  CHECK(expected_return(wb.game, sit, wb.ground_truth) == 0.0);
  std::vector<double> bonus(9, 0.0);
  bonus[0] = 2.0;
  CHECK(expected_return(wb.game, sit, bonus) ==
        doctest::Approx(2.0 / (1.0 - 0.5)).epsilon(1e-10));
}

TEST_CASE("per agent marginals isolate each agent's unsafe cells") {
  const ExperimentConfig c =
      parse_config(R"({"grid": {"side": 3, "n_agents": 1,
                                "move_success_prob": 1.0}})");
  const Workbench wb = make_workbench(c);

  // March along the top row and down the right column: passes through
  // cell 5, which the three by three map marks unsafe.
  const DecisionRule dash = DecisionRule::deterministic(
      {kRight, kRight, kDown, 0, 0, kDown, 0, 0, 0});
  const auto hit = per_agent_unsafe(wb.game, dash, 64);
  REQUIRE(hit.size() == 1);
  CHECK(hit[0] == doctest::Approx(1.0).epsilon(1e-12));

  const DecisionRule sit = DecisionRule::deterministic(std::vector<int>(9, 0));
  const auto clear = per_agent_unsafe(wb.game, sit, 64);
  CHECK(clear[0] == 0.0);

  // Two agents with symmetric roles have symmetric marginals.
  const ExperimentConfig c2 =
      parse_config(R"({"grid": {"side": 2, "n_agents": 2,
                                "unsafe": [1], "goal": [3]}})");
  const Workbench wb2 = make_workbench(c2);
  const DecisionRule uniform =
      DecisionRule::uniform(wb2.game.n_states, wb2.game.n_actions);
  const auto pair = per_agent_unsafe(wb2.game, uniform, 16);
  REQUIRE(pair.size() == 2);
  CHECK(pair[0] == doctest::Approx(pair[1]).epsilon(1e-12));
  CHECK(pair[0] > 0.0);
  CHECK(pair[0] < 1.0);
}

TEST_CASE("rules survive the JSON round trip") {
  DecisionRule rule;
  rule.rows = {
      {{0, 0.25}, {3, 0.75}},
      {{1, 1.0}},
      {{2, 0.125}, {3, 0.375}, {4, 0.5}},
  };
  const DecisionRule back = rule_from_json(rule_to_json(rule));
  CHECK(back.rows == rule.rows);

  CHECK_THROWS(rule_from_json("{\"rows\": 3}"));
  CHECK_THROWS(rule_from_json("nope"));
}

TEST_CASE("reward grids flatten joint rewards to per agent cell views") {
  GridWorldSpec spec;
  spec.side = 2;
  spec.n_agents = 1;
  spec.goal_cells = {3};
  spec.cell_rewards = {0.0, 1.0, 2.0, 4.0};
  spec.move_success_prob = 1.0;
  spec.validate();

  const std::string csv =
      reward_grid_csv(spec, joint_ground_truth_reward(spec), 0);
  std::istringstream in(csv);
  std::string line;
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) values.push_back(std::stod(cell));
  }
  REQUIRE(values.size() == 4);
  for (int i = 0; i < 4; ++i)
    CHECK(values[i] == doctest::Approx(spec.cell_rewards[i]).epsilon(1e-12));

  // With a second agent the view averages over the partner's position.
  GridWorldSpec pair = spec;
  pair.n_agents = 2;
  pair.validate();
  const std::string csv2 =
      reward_grid_csv(pair, joint_ground_truth_reward(pair), 0);
  std::istringstream in2(csv2);
  values.clear();
  while (std::getline(in2, line)) {
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) values.push_back(std::stod(cell));
  }
  REQUIRE(values.size() == 4);
  const double partner_mean = (0.0 + 1.0 + 2.0 + 4.0) / 4.0;
  for (int i = 0; i < 4; ++i)
    CHECK(values[i] ==
          doctest::Approx(spec.cell_rewards[i] + partner_mean).epsilon(1e-12));
}

TEST_CASE("the demo and verify modes run end to end in a scratch directory") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "cegal_config_mode_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  ExperimentConfig c = parse_config(
      R"({"grid": {"side": 3, "n_agents": 1},
          "property": "P<=0.25 [ true U<=64 \"unsafe\" ]",
          "demos": {"count": 5, "horizon": 20, "seed": 7}})");
  c.output_dir = dir.string();

  std::ostringstream out;
  CHECK(run_mode("demos", c, false, out) == 0);
  CHECK(fs::exists(dir / "demos.jsonl"));

  std::ifstream demo_file(dir / "demos.jsonl");
  const DemoSet demos = read_demos(demo_file);
  CHECK(demos.trajectories.size() == 5);
  CHECK(demos.horizon == 20);

  // The three by three map walls the goal corner off behind unsafe cells,
  // so the default pessimistic rule still crosses them.
  std::ostringstream out2;
  CHECK(run_mode("verify", c, false, out2) == 0);
  const std::string verdict = out2.str();
  CHECK(verdict.rfind("Unsatisfy ", 0) == 0);
  CHECK(verdict.find("unsafe0=") != std::string::npos);

  fs::remove_all(dir);
}
