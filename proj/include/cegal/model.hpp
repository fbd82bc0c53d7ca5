#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace cegal {

/// Sparse probability row: (index, probability) pairs sorted by index.
using SparseRow = std::vector<std::pair<int, double>>;

/// Row entries must be positive and sum to 1 within this tolerance.
inline constexpr double kRowSumTol = 1e-12;

/// Mixed-radix packing of per-agent digits into a single joint index.
/// Agent 0 occupies the most significant position.
class JointIndexer {
 public:
  JointIndexer(int n_agents, int radix);

  int n_agents() const { return n_agents_; }
  int radix() const { return radix_; }
  /// Number of joint indices, radix^n_agents.
  int count() const { return count_; }

  int encode(const std::vector<int>& digits) const;
  std::vector<int> decode(int code) const;
  /// Digit of a single agent without materializing the full decode.
  int digit(int code, int agent) const;

 private:
  int n_agents_;
  int radix_;
  int count_;
  std::vector<int> place_;  // place value per agent
};

/// Finite Markov game with joint states and joint actions flattened to
/// integer indices.  Transitions are stored per (state, action) pair as
/// sparse rows over successor states.
struct MarkovGame {
  int n_agents = 1;
  int per_agent_states = 0;   // Q, joint states = Q^n_agents
  int per_agent_actions = 0;  // per-agent action count
  int n_states = 0;
  int n_actions = 0;          // joint action count
  double discount = 0.99;
  int initial_state = 0;
  /// Indexed by s * n_actions + a.
  std::vector<SparseRow> transitions;
  /// Atomic proposition name -> set of joint states where it holds.
  std::map<std::string, std::set<int>> labels;

  JointIndexer state_indexer() const { return {n_agents, per_agent_states}; }
  JointIndexer action_indexer() const { return {n_agents, per_agent_actions}; }

  const SparseRow& row(int s, int a) const {
    return transitions[static_cast<std::size_t>(s) * n_actions + a];
  }

  /// Throws std::invalid_argument on malformed dimensions, rows that do not
  /// sum to 1 within kRowSumTol, or label states out of range.
  void validate() const;
};

/// Memoryless decision rule: per joint state, a distribution over joint
/// actions stored as a sparse row.
struct DecisionRule {
  std::vector<SparseRow> rows;

  static DecisionRule deterministic(const std::vector<int>& action_per_state);
  static DecisionRule uniform(int n_states, int n_actions);

  int n_states() const { return static_cast<int>(rows.size()); }
  /// Most probable action in a state (ties to the lowest index).
  int mode_action(int s) const;
  void validate(int n_states, int n_actions) const;
};

/// State feature map f : S -> [0, 1]^dim.  The default is a one-hot map over
/// joint states; an explicit table supports handcrafted features.
class FeatureMap {
 public:
  static FeatureMap one_hot(int n_states);
  /// Table rows are per-state feature vectors; every entry must be in [0, 1].
  static FeatureMap from_table(std::vector<std::vector<double>> table);

  int dim() const { return dim_; }
  int n_states() const { return n_states_; }
  bool is_one_hot() const { return one_hot_; }

  std::vector<double> value(int s) const;
  /// acc += scale * f(s); avoids materializing one-hot rows.
  void accumulate(std::vector<double>& acc, int s, double scale) const;

 private:
  FeatureMap() = default;
  int dim_ = 0;
  int n_states_ = 0;
  bool one_hot_ = false;
  std::vector<std::vector<double>> table_;
};

/// Square grid world shared by all agents.  Cells are indexed row major,
/// cell = row * side + col, with (0,0) the top-left corner.  Actions are
/// 0: stay, 1: left, 2: down, 3: right, 4: up.  Left/right/stay are
/// deterministic; down/up succeed with move_success_prob and otherwise leave
/// the agent in place.  A move off the grid leaves the agent in place.
struct GridWorldSpec {
  int side = 8;
  int n_agents = 2;
  std::vector<int> unsafe_cells;
  std::vector<int> goal_cells;
  int init_cell = 0;
  /// Ground-truth per-cell reward, side*side entries (expert synthesis).
  std::vector<double> cell_rewards;
  double move_success_prob = 0.5;

  void validate() const;
  int cell(int row, int col) const { return row * side + col; }
};

inline constexpr int kGridActions = 5;
enum GridAction { kStay = 0, kLeft = 1, kDown = 2, kRight = 3, kUp = 4 };

/// Per-agent transition row for one grid cell and action.
SparseRow grid_cell_row(const GridWorldSpec& spec, int cell, int action);

/// Builds the joint Markov game for a grid spec.  Joint transition rows are
/// products of per-agent rows.  Labels: "unsafe" marks joint states where
/// any agent occupies an unsafe cell, "goal" where all agents occupy goal
/// cells, "init" where all agents occupy the initial cell, and "unsafe<i>"
/// the per-agent marginals.
MarkovGame build_grid_world(const GridWorldSpec& spec, double discount);

/// Ground-truth joint reward: sum of per-cell rewards over agents.
std::vector<double> joint_ground_truth_reward(const GridWorldSpec& spec);

/// r(s) = w . f(s) for every joint state.
std::vector<double> reward_from_weights(const std::vector<double>& weights,
                                        const FeatureMap& features);

}  // namespace cegal
