#include <doctest.h>

#include <random>
#include <stdexcept>

#include "cegal/model.hpp"
#include "cegal/rng.hpp"
#include "oracles.hpp"

using namespace cegal;

TEST_CASE("joint indexer packs agent 0 as the most significant digit") {
  JointIndexer idx(3, 5);
  CHECK(idx.count() == 125);
  CHECK(idx.encode({0, 0, 0}) == 0);
  CHECK(idx.encode({1, 0, 0}) == 25);
  CHECK(idx.encode({0, 0, 1}) == 1);
  CHECK(idx.encode({2, 3, 4}) == 2 * 25 + 3 * 5 + 4);
  for (int code : {0, 1, 17, 93, 124}) {
    const auto digits = idx.decode(code);
    CHECK(idx.encode(digits) == code);
    for (int agent = 0; agent < 3; ++agent)
      CHECK(idx.digit(code, agent) == digits[agent]);
  }
}

TEST_CASE("joint indexer rejects overflowing spaces") {
  CHECK_THROWS_AS(JointIndexer(8, 4096), std::invalid_argument);
  CHECK_NOTHROW(JointIndexer(2, 4096));
}

TEST_CASE("grid cell rows match the coordinate-level reference") {
  GridWorldSpec spec;
  spec.n_agents = 1;
  spec.goal_cells = {0};
  for (int side : {2, 3, 5}) {
    for (double p : {0.5, 0.25, 1.0}) {
      spec.side = side;
      spec.move_success_prob = p;
      spec.cell_rewards.assign(side * side, 0.0);
      for (int cell = 0; cell < side * side; ++cell)
        for (int action = 0; action < kGridActions; ++action)
          CHECK(grid_cell_row(spec, cell, action) ==
                oracles::grid_row_reference(spec, cell, action));
    }
  }
}

TEST_CASE("stay, left and right are deterministic; up and down are not") {
  GridWorldSpec spec;
  spec.side = 4;
  spec.n_agents = 1;
  spec.goal_cells = {15};
  spec.cell_rewards.assign(16, 0.0);
  spec.move_success_prob = 0.5;
  const int mid = spec.cell(1, 1);
  CHECK(grid_cell_row(spec, mid, kStay) == SparseRow{{mid, 1.0}});
  CHECK(grid_cell_row(spec, mid, kLeft) == SparseRow{{spec.cell(1, 0), 1.0}});
  CHECK(grid_cell_row(spec, mid, kRight) == SparseRow{{spec.cell(1, 2), 1.0}});
  CHECK(grid_cell_row(spec, mid, kDown) ==
        SparseRow{{mid, 0.5}, {spec.cell(2, 1), 0.5}});
  CHECK(grid_cell_row(spec, mid, kUp) ==
        SparseRow{{spec.cell(0, 1), 0.5}, {mid, 0.5}});
  // Off-grid moves collapse to staying put.
  CHECK(grid_cell_row(spec, 0, kLeft) == SparseRow{{0, 1.0}});
  CHECK(grid_cell_row(spec, 0, kUp) == SparseRow{{0, 1.0}});
}

TEST_CASE("joint transition rows are products of per-agent rows") {
  GridWorldSpec spec;
  spec.side = 3;
  spec.n_agents = 2;
  spec.unsafe_cells = {5};
  spec.goal_cells = {8};
  spec.cell_rewards.assign(9, 0.1);
  const MarkovGame game = build_grid_world(spec, 0.9);
  CHECK(game.n_states == 81);
  CHECK(game.n_actions == 25);
  game.validate();

  const JointIndexer states = game.state_indexer();
  const JointIndexer actions = game.action_indexer();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int s = static_cast<int>(uniform_int(rng, 81));
    const int a = static_cast<int>(uniform_int(rng, 25));
    std::map<int, double> expected;
    const SparseRow row0 =
        grid_cell_row(spec, states.digit(s, 0), actions.digit(a, 0));
    const SparseRow row1 =
        grid_cell_row(spec, states.digit(s, 1), actions.digit(a, 1));
    for (const auto& [c0, p0] : row0)
      for (const auto& [c1, p1] : row1)
        expected[states.encode({c0, c1})] += p0 * p1;
    const SparseRow& actual = game.row(s, a);
    REQUIRE(actual.size() == expected.size());
    for (const auto& [t, p] : actual)
      CHECK(p == doctest::Approx(expected.at(t)).epsilon(1e-15));
  }
}

TEST_CASE("grid labels follow the any-unsafe / all-goal convention") {
  GridWorldSpec spec;
  spec.side = 3;
  spec.n_agents = 2;
  spec.unsafe_cells = {4};
  spec.goal_cells = {8};
  spec.init_cell = 0;
  spec.cell_rewards.assign(9, 0.0);
  const MarkovGame game = build_grid_world(spec, 0.9);
  const JointIndexer states = game.state_indexer();

  const auto& unsafe = game.labels.at("unsafe");
  const auto& unsafe0 = game.labels.at("unsafe0");
  const auto& unsafe1 = game.labels.at("unsafe1");
  const auto& goal = game.labels.at("goal");
  for (int s = 0; s < game.n_states; ++s) {
    const bool a0 = states.digit(s, 0) == 4, a1 = states.digit(s, 1) == 4;
    CHECK(unsafe.count(s) == static_cast<std::size_t>(a0 || a1));
    CHECK(unsafe0.count(s) == static_cast<std::size_t>(a0));
    CHECK(unsafe1.count(s) == static_cast<std::size_t>(a1));
    CHECK(goal.count(s) == static_cast<std::size_t>(
                               states.digit(s, 0) == 8 &&
                               states.digit(s, 1) == 8));
  }
  CHECK(game.labels.at("init") == std::set<int>{0});
  CHECK(game.initial_state == 0);
}

TEST_CASE("ground-truth joint reward sums per-agent cell rewards") {
  GridWorldSpec spec;
  spec.side = 2;
  spec.n_agents = 2;
  spec.goal_cells = {3};
  spec.cell_rewards = {0.0, 0.25, 0.5, 1.0};
  const auto reward = joint_ground_truth_reward(spec);
  REQUIRE(reward.size() == 16);
  const JointIndexer states(2, 4);
  for (int s = 0; s < 16; ++s)
    CHECK(reward[s] == doctest::Approx(
                           spec.cell_rewards[states.digit(s, 0)] +
                           spec.cell_rewards[states.digit(s, 1)]));
}

TEST_CASE("grid spec validation rejects inconsistent maps") {
  GridWorldSpec spec;
  spec.side = 3;
  spec.n_agents = 1;
  spec.goal_cells = {8};
  spec.cell_rewards.assign(9, 0.0);
  CHECK_NOTHROW(spec.validate());

  GridWorldSpec bad = spec;
  bad.unsafe_cells = {8};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.init_cell = 9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.cell_rewards.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.move_success_prob = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.goal_cells.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("decision rules expose modes and validate their rows") {
  const DecisionRule det = DecisionRule::deterministic({2, 0, 1});
  CHECK(det.n_states() == 3);
  CHECK(det.mode_action(0) == 2);
  CHECK(det.rows[1] == SparseRow{{0, 1.0}});
  CHECK_NOTHROW(det.validate(3, 3));
  CHECK_THROWS_AS(det.validate(3, 2), std::invalid_argument);

  const DecisionRule uni = DecisionRule::uniform(2, 4);
  CHECK(uni.rows[0].size() == 4);
  CHECK(uni.mode_action(1) == 0);  // ties resolve to the lowest action
  CHECK_NOTHROW(uni.validate(2, 4));

  DecisionRule broken = uni;
  broken.rows[0][2].second += 0.5;
  CHECK_THROWS_AS(broken.validate(2, 4), std::invalid_argument);
}

TEST_CASE("one-hot features accumulate without materializing rows") {
  const FeatureMap f = FeatureMap::one_hot(4);
  CHECK(f.dim() == 4);
  CHECK(f.is_one_hot());
  CHECK(f.value(2) == std::vector<double>{0.0, 0.0, 1.0, 0.0});
  std::vector<double> acc(4, 0.0);
  f.accumulate(acc, 1, 0.5);
  f.accumulate(acc, 1, 0.25);
  f.accumulate(acc, 3, 1.0);
  CHECK(acc == std::vector<double>{0.0, 0.75, 0.0, 1.0});
}

TEST_CASE("table features validate their range") {
  CHECK_THROWS_AS(FeatureMap::from_table({{0.5}, {1.5}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(FeatureMap::from_table({{0.5, 0.1}, {0.2}}),
                  std::invalid_argument);
  const FeatureMap f = FeatureMap::from_table({{0.5, 1.0}, {0.0, 0.25}});
  CHECK(f.dim() == 2);
  CHECK_FALSE(f.is_one_hot());
  std::vector<double> acc(2, 0.0);
  f.accumulate(acc, 1, 2.0);
  CHECK(acc == std::vector<double>{0.0, 0.5});
}

TEST_CASE("weight rewards are plain dot products") {
  const FeatureMap one_hot = FeatureMap::one_hot(3);
  CHECK(reward_from_weights({1.0, -2.0, 0.5}, one_hot) ==
        std::vector<double>{1.0, -2.0, 0.5});
  const FeatureMap table = FeatureMap::from_table({{1.0, 0.0}, {0.5, 0.5}});
  const auto r = reward_from_weights({2.0, -1.0}, table);
  CHECK(r[0] == doctest::Approx(2.0));
  CHECK(r[1] == doctest::Approx(0.5));
}
