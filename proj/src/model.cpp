#include "cegal/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace cegal {

JointIndexer::JointIndexer(int n_agents, int radix)
    : n_agents_(n_agents), radix_(radix) {
  if (n_agents < 1) throw std::invalid_argument("JointIndexer: n_agents < 1");
  if (radix < 1) throw std::invalid_argument("JointIndexer: radix < 1");
  std::int64_t count = 1;
  place_.assign(n_agents, 1);
  for (int i = n_agents - 1; i >= 0; --i) {
    place_[i] = static_cast<int>(count);
    count *= radix;
    if (count > std::numeric_limits<int>::max())
      throw std::invalid_argument("JointIndexer: radix^n_agents overflows int");
  }
  count_ = static_cast<int>(count);
}

int JointIndexer::encode(const std::vector<int>& digits) const {
  if (static_cast<int>(digits.size()) != n_agents_)
    throw std::invalid_argument("encode: digit count != n_agents");
  int code = 0;
  for (int i = 0; i < n_agents_; ++i) {
    if (digits[i] < 0 || digits[i] >= radix_)
      throw std::invalid_argument("encode: digit out of range");
    code += digits[i] * place_[i];
  }
  return code;
}

std::vector<int> JointIndexer::decode(int code) const {
  if (code < 0 || code >= count_)
    throw std::invalid_argument("decode: code out of range");
  std::vector<int> digits(n_agents_);
  for (int i = 0; i < n_agents_; ++i) {
    digits[i] = (code / place_[i]) % radix_;
  }
  return digits;
}

int JointIndexer::digit(int code, int agent) const {
  if (code < 0 || code >= count_)
    throw std::invalid_argument("digit: code out of range");
  if (agent < 0 || agent >= n_agents_)
    throw std::invalid_argument("digit: agent out of range");
  return (code / place_[agent]) % radix_;
}

namespace {

void check_row(const SparseRow& row, int n, const char* what) {
  double sum = 0.0;
  int prev = -1;
  for (const auto& [idx, p] : row) {
    if (idx < 0 || idx >= n)
      throw std::invalid_argument(std::string(what) + ": index out of range");
    if (idx <= prev)
      throw std::invalid_argument(std::string(what) +
                                  ": row not sorted by index");
    if (!(p > 0.0))
      throw std::invalid_argument(std::string(what) +
                                  ": non-positive probability");
    prev = idx;
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTol)
    throw std::invalid_argument(std::string(what) +
                                ": row does not sum to 1");
}

}  // namespace

void MarkovGame::validate() const {
  if (n_agents < 1) throw std::invalid_argument("game: n_agents < 1");
  if (n_states < 1) throw std::invalid_argument("game: n_states < 1");
  if (n_actions < 1) throw std::invalid_argument("game: n_actions < 1");
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("game: discount must lie in [0, 1)");
  if (initial_state < 0 || initial_state >= n_states)
    throw std::invalid_argument("game: initial state out of range");
  if (transitions.size() !=
      static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions))
    throw std::invalid_argument("game: transition table has wrong size");
  for (const auto& row : transitions) check_row(row, n_states, "game");
  for (const auto& [name, states] : labels) {
    if (name.empty()) throw std::invalid_argument("game: empty label name");
    for (int s : states)
      if (s < 0 || s >= n_states)
        throw std::invalid_argument("game: label state out of range");
  }
}

DecisionRule DecisionRule::deterministic(
    const std::vector<int>& action_per_state) {
  DecisionRule rule;
  rule.rows.reserve(action_per_state.size());
  for (int a : action_per_state) rule.rows.push_back({{a, 1.0}});
  return rule;
}

DecisionRule DecisionRule::uniform(int n_states, int n_actions) {
  DecisionRule rule;
  SparseRow row;
  row.reserve(n_actions);
  const double p = 1.0 / n_actions;
  for (int a = 0; a < n_actions; ++a) row.emplace_back(a, p);
  rule.rows.assign(n_states, row);
  return rule;
}

int DecisionRule::mode_action(int s) const {
  const SparseRow& row = rows.at(s);
  if (row.empty()) throw std::invalid_argument("rule: empty row");
  int best = row.front().first;
  double best_p = row.front().second;
  for (const auto& [a, p] : row) {
    if (p > best_p) {
      best = a;
      best_p = p;
    }
  }
  return best;
}

void DecisionRule::validate(int n_states, int n_actions) const {
  if (static_cast<int>(rows.size()) != n_states)
    throw std::invalid_argument("rule: wrong number of states");
  for (const auto& row : rows) check_row(row, n_actions, "rule");
}

FeatureMap FeatureMap::one_hot(int n_states) {
  if (n_states < 1) throw std::invalid_argument("features: n_states < 1");
  FeatureMap f;
  f.dim_ = n_states;
  f.n_states_ = n_states;
  f.one_hot_ = true;
  return f;
}

FeatureMap FeatureMap::from_table(std::vector<std::vector<double>> table) {
  if (table.empty()) throw std::invalid_argument("features: empty table");
  FeatureMap f;
  f.n_states_ = static_cast<int>(table.size());
  f.dim_ = static_cast<int>(table.front().size());
  if (f.dim_ < 1) throw std::invalid_argument("features: zero dimension");
  for (const auto& row : table) {
    if (static_cast<int>(row.size()) != f.dim_)
      throw std::invalid_argument("features: ragged table");
    for (double v : row)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("features: entry outside [0, 1]");
  }
  f.table_ = std::move(table);
  return f;
}

std::vector<double> FeatureMap::value(int s) const {
  if (s < 0 || s >= n_states_)
    throw std::invalid_argument("features: state out of range");
  if (one_hot_) {
    std::vector<double> v(dim_, 0.0);
    v[s] = 1.0;
    return v;
  }
  return table_[s];
}

void FeatureMap::accumulate(std::vector<double>& acc, int s,
                            double scale) const {
  if (s < 0 || s >= n_states_)
    throw std::invalid_argument("features: state out of range");
  if (one_hot_) {
    acc[s] += scale;
    return;
  }
  const auto& row = table_[s];
  for (int j = 0; j < dim_; ++j) acc[j] += scale * row[j];
}

void GridWorldSpec::validate() const {
  if (side < 2) throw std::invalid_argument("grid: side < 2");
  if (n_agents < 1) throw std::invalid_argument("grid: n_agents < 1");
  const int cells = side * side;
  auto check_cell = [&](int c, const char* what) {
    if (c < 0 || c >= cells)
      throw std::invalid_argument(std::string("grid: ") + what +
                                  " out of range");
  };
  for (int c : unsafe_cells) check_cell(c, "unsafe cell");
  for (int c : goal_cells) check_cell(c, "goal cell");
  if (goal_cells.empty()) throw std::invalid_argument("grid: no goal cells");
  check_cell(init_cell, "init cell");
  if (static_cast<int>(cell_rewards.size()) != cells)
    throw std::invalid_argument("grid: cell_rewards size != side^2");
  if (!(move_success_prob > 0.0 && move_success_prob <= 1.0))
    throw std::invalid_argument("grid: move_success_prob outside (0, 1]");
  for (int c : unsafe_cells)
    for (int g : goal_cells)
      if (c == g) throw std::invalid_argument("grid: goal cell marked unsafe");
}

SparseRow grid_cell_row(const GridWorldSpec& spec, int cell, int action) {
  const int side = spec.side;
  const int row = cell / side;
  const int col = cell % side;
  int nr = row, nc = col;
  switch (action) {
    case kStay: break;
    case kLeft: nc = col - 1; break;
    case kDown: nr = row + 1; break;
    case kRight: nc = col + 1; break;
    case kUp: nr = row - 1; break;
    default: throw std::invalid_argument("grid: unknown action");
  }
  const bool off_grid = nr < 0 || nr >= side || nc < 0 || nc >= side;
  const int target = off_grid ? cell : nr * side + nc;
  const bool stochastic = action == kDown || action == kUp;
  if (!stochastic || spec.move_success_prob == 1.0 || target == cell)
    return {{target, 1.0}};
  const double p = spec.move_success_prob;
  SparseRow out;
  if (cell < target) {
    out = {{cell, 1.0 - p}, {target, p}};
  } else {
    out = {{target, p}, {cell, 1.0 - p}};
  }
  return out;
}

MarkovGame build_grid_world(const GridWorldSpec& spec, double discount) {
  spec.validate();
  MarkovGame game;
  game.n_agents = spec.n_agents;
  game.per_agent_states = spec.side * spec.side;
  game.per_agent_actions = kGridActions;
  game.discount = discount;
  const JointIndexer sx(spec.n_agents, game.per_agent_states);
  const JointIndexer ax(spec.n_agents, kGridActions);
  game.n_states = sx.count();
  game.n_actions = ax.count();
  game.initial_state =
      sx.encode(std::vector<int>(spec.n_agents, spec.init_cell));

  game.transitions.resize(static_cast<std::size_t>(game.n_states) *
                          game.n_actions);
  std::vector<SparseRow> agent_rows(spec.n_agents);
  for (int s = 0; s < game.n_states; ++s) {
    const std::vector<int> cells = sx.decode(s);
    for (int a = 0; a < game.n_actions; ++a) {
      const std::vector<int> acts = ax.decode(a);
      for (int i = 0; i < spec.n_agents; ++i)
        agent_rows[i] = grid_cell_row(spec, cells[i], acts[i]);
      // Product distribution over joint successors.
      SparseRow joint = {{0, 1.0}};
      for (int i = 0; i < spec.n_agents; ++i) {
        SparseRow next;
        next.reserve(joint.size() * agent_rows[i].size());
        for (const auto& [code, p] : joint)
          for (const auto& [cell, q] : agent_rows[i])
            next.emplace_back(code * game.per_agent_states + cell, p * q);
        joint = std::move(next);
      }
      std::sort(joint.begin(), joint.end());
      game.transitions[static_cast<std::size_t>(s) * game.n_actions + a] =
          std::move(joint);
    }
  }

  const std::set<int> unsafe(spec.unsafe_cells.begin(),
                             spec.unsafe_cells.end());
  const std::set<int> goal(spec.goal_cells.begin(), spec.goal_cells.end());
  auto& labels = game.labels;
  for (int i = 0; i < spec.n_agents; ++i)
    labels["unsafe" + std::to_string(i)];
  labels["unsafe"];
  labels["goal"];
  labels["init"];
  for (int s = 0; s < game.n_states; ++s) {
    bool any_unsafe = false, all_goal = true, all_init = true;
    for (int i = 0; i < spec.n_agents; ++i) {
      const int cell = sx.digit(s, i);
      if (unsafe.count(cell)) {
        labels["unsafe" + std::to_string(i)].insert(s);
        any_unsafe = true;
      }
      if (!goal.count(cell)) all_goal = false;
      if (cell != spec.init_cell) all_init = false;
    }
    if (any_unsafe) labels["unsafe"].insert(s);
    if (all_goal) labels["goal"].insert(s);
    if (all_init) labels["init"].insert(s);
  }
  return game;
}

std::vector<double> joint_ground_truth_reward(const GridWorldSpec& spec) {
  spec.validate();
  const JointIndexer sx(spec.n_agents, spec.side * spec.side);
  std::vector<double> reward(sx.count(), 0.0);
  for (int s = 0; s < sx.count(); ++s) {
    double r = 0.0;
    for (int i = 0; i < spec.n_agents; ++i)
      r += spec.cell_rewards[sx.digit(s, i)];
    reward[s] = r;
  }
  return reward;
}

std::vector<double> reward_from_weights(const std::vector<double>& weights,
                                        const FeatureMap& features) {
  if (static_cast<int>(weights.size()) != features.dim())
    throw std::invalid_argument("reward: weight dimension != feature dim");
  std::vector<double> reward(features.n_states(), 0.0);
  if (features.is_one_hot()) {
    for (int s = 0; s < features.n_states(); ++s) reward[s] = weights[s];
    return reward;
  }
  for (int s = 0; s < features.n_states(); ++s) {
    const auto f = features.value(s);
    double r = 0.0;
    for (int j = 0; j < features.dim(); ++j) r += weights[j] * f[j];
    reward[s] = r;
  }
  return reward;
}

}  // namespace cegal
