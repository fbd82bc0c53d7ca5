#include "cegal/config.hpp"

#include <cmath>
#include <stdexcept>

#include "cegal/solve.hpp"

#include <json.hpp>

namespace cegal {

namespace {

using nlohmann::json;

json grid_to_json(const GridConfig& g) {
  return json{{"side", g.side},
              {"n_agents", g.n_agents},
              {"unsafe", g.unsafe_cells},
              {"goal", g.goal_cells},
              {"init", g.init_cell},
              {"rewards", g.cell_rewards},
              {"move_success_prob", g.move_success_prob}};
}

json config_to_tree(const ExperimentConfig& c) {
  return json{{"grid", grid_to_json(c.grid)},
              {"learner",
               {{"epsilon", c.learner.epsilon},
                {"sigma", c.learner.sigma},
                {"alpha", c.learner.alpha},
                {"discount", c.learner.discount},
                {"max_iter", c.learner.max_iter},
                {"max_evidences", c.learner.max_evidences}}},
              {"demos",
               {{"count", c.demos.count},
                {"horizon", c.demos.horizon},
                {"seed", c.demos.seed}}},
              {"property", c.property},
              {"output_dir", c.output_dir},
              {"rule_file", c.rule_file}};
}

template <class T>
void read_into(const json& node, const char* key, T& out) {
  const auto it = node.find(key);
  if (it != node.end()) out = it->get<T>();
}

GridConfig grid_from_tree(const json& node) {
  GridConfig g;
  read_into(node, "side", g.side);
  read_into(node, "n_agents", g.n_agents);
  read_into(node, "unsafe", g.unsafe_cells);
  read_into(node, "goal", g.goal_cells);
  read_into(node, "init", g.init_cell);
  read_into(node, "rewards", g.cell_rewards);
  read_into(node, "move_success_prob", g.move_success_prob);
  return g;
}

ExperimentConfig config_from_tree(const json& tree) {
  ExperimentConfig c;
  if (tree.contains("grid")) c.grid = grid_from_tree(tree.at("grid"));
  if (tree.contains("learner")) {
    const json& l = tree.at("learner");
    read_into(l, "epsilon", c.learner.epsilon);
    read_into(l, "sigma", c.learner.sigma);
    read_into(l, "alpha", c.learner.alpha);
    read_into(l, "discount", c.learner.discount);
    read_into(l, "max_iter", c.learner.max_iter);
    read_into(l, "max_evidences", c.learner.max_evidences);
  }
  if (tree.contains("demos")) {
    const json& d = tree.at("demos");
    read_into(d, "count", c.demos.count);
    read_into(d, "horizon", c.demos.horizon);
    read_into(d, "seed", c.demos.seed);
  }
  read_into(tree, "property", c.property);
  read_into(tree, "output_dir", c.output_dir);
  read_into(tree, "rule_file", c.rule_file);
  return c;
}

}  // namespace

GridConfig default_grid(int side, int n_agents) {
  if (side < 2) throw std::invalid_argument("default_grid: side < 2");
  if (n_agents < 1) throw std::invalid_argument("default_grid: n_agents < 1");
  GridConfig g;
  g.side = side;
  g.n_agents = n_agents;
  g.init_cell = 0;
  g.goal_cells.assign(1, side * side - 1);
  g.move_success_prob = 0.5;

  // Reward gradient toward the far corner plus a diagonal bonus ridge.
  g.cell_rewards.assign(static_cast<std::size_t>(side) * side, 0.0);
  const double reach = 2.0 * (side - 1);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      g.cell_rewards[static_cast<std::size_t>(y) * side + x] =
          0.3 * (x + y) / reach;
  for (int i = 1; i < side - 1; ++i)
    g.cell_rewards[static_cast<std::size_t>(i) * side + i] += 0.45;
  g.cell_rewards.back() = 1.0;

  // Unsafe gates across the ridge at one and two thirds of the diagonal:
  // continuing from (d, d) to (d + 1, d + 1) means stepping on one of them.
  int gates[2] = {side / 3, 2 * side / 3};
  for (int d : gates) {
    if (d < 1 || d + 1 > side - 1) continue;
    const int a = (d + 1) * side + d;  // (x = d, y = d + 1)
    const int b = d * side + (d + 1);  // (x = d + 1, y = d)
    if (g.unsafe_cells.empty() || g.unsafe_cells.back() != b) {
      g.unsafe_cells.push_back(a);
      g.unsafe_cells.push_back(b);
    }
  }
  for (int c : g.unsafe_cells) g.cell_rewards[c] = -0.08;
  return g;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.grid = default_grid(8, 2);
  return c;
}

GridWorldSpec to_spec(const GridConfig& grid) {
  GridWorldSpec spec;
  spec.side = grid.side;
  spec.n_agents = grid.n_agents;
  spec.unsafe_cells = grid.unsafe_cells;
  spec.goal_cells = grid.goal_cells;
  spec.init_cell = grid.init_cell;
  spec.cell_rewards = grid.cell_rewards;
  spec.move_success_prob = grid.move_success_prob;
  spec.validate();
  return spec;
}

CegalParams to_cegal_params(const LearnerConfig& learner) {
  CegalParams p;
  p.epsilon = learner.epsilon;
  p.sigma = learner.sigma;
  p.alpha = learner.alpha;
  p.max_iter = learner.max_iter;
  p.max_evidences = learner.max_evidences;
  return p;
}

int demo_horizon(const ExperimentConfig& config) {
  if (config.demos.horizon > 0) return config.demos.horizon;
  return mc_horizon(config.learner.discount);
}

std::string config_to_json(const ExperimentConfig& config) {
  return config_to_tree(config).dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc = json::parse(json_text);
  if (!doc.is_object()) throw std::invalid_argument("config: not an object");
  int side = 8, n_agents = 2;
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    read_into(g, "side", side);
    read_into(g, "n_agents", n_agents);
  }
  ExperimentConfig defaults;
  defaults.grid = default_grid(side, n_agents);
  json tree = config_to_tree(defaults);
  tree.merge_patch(doc);
  return config_from_tree(tree);
}

std::string apply_override(const std::string& json_text,
                           const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override must look like path.to.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // unquoted strings pass through verbatim
  }

  json doc = json::parse(json_text);
  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty())
      throw std::invalid_argument("override path has an empty segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    if (!node->is_object()) *node = json::object();
    begin = dot + 1;
  }
  return doc.dump();
}

}  // namespace cegal
