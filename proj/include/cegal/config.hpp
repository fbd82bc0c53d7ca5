// Experiment configuration: a JSON-serializable description of a grid-world
// game, the property to enforce, the learner parameters, and the
// demonstration setup.  Unset fields fall back to a parametric default map
// whose layout scales with the grid side.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cegal/learner.hpp"
#include "cegal/model.hpp"

namespace cegal {

struct GridConfig {
  int side = 8;
  int n_agents = 2;
  std::vector<int> unsafe_cells;
  std::vector<int> goal_cells;
  int init_cell = 0;
  std::vector<double> cell_rewards;
  double move_success_prob = 0.5;
};

struct LearnerConfig {
  double epsilon = 10.0;
  double sigma = 1e-5;
  double alpha = 0.5;
  double discount = 0.99;
  int max_iter = 200;
  int max_evidences = kDefaultMaxEvidences;
};

struct DemoConfig {
  int count = 100;
  /// 0 selects the horizon automatically from the discount factor.
  int horizon = 0;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  GridConfig grid;
  LearnerConfig learner;
  DemoConfig demos;
  std::string property = "P<=0.25 [ true U<=4096 \"unsafe\" ]";
  std::string output_dir = "out";
  /// Rule consumed by the verify and export modes: "safe" (the pessimistic
  /// rule), "expert" (optimal for the ground-truth reward), or a path to a
  /// rule JSON file.
  std::string rule_file = "safe";
};

/// Default map for a side x side grid: rewards rise toward the far corner,
/// a bonus ridge runs along the main diagonal, and pairs of unsafe cells
/// gate the ridge where it crosses one and two thirds of the way up.  The
/// gates make the reward-greedy route unsafe while leaving a detour along
/// the border free of unsafe cells (for side >= 6).
GridConfig default_grid(int side, int n_agents);

ExperimentConfig default_config();

GridWorldSpec to_spec(const GridConfig& grid);

CegalParams to_cegal_params(const LearnerConfig& learner);

/// Horizon used for demonstrations: the configured value, or the number of
/// steps after which the discounted tail mass drops below 1e-6.
int demo_horizon(const ExperimentConfig& config);

std::string config_to_json(const ExperimentConfig& config);

/// Parses a configuration document.  Fields that are absent take default
/// values; the grid defaults are regenerated for the document's side and
/// agent count before the document is merged over them, so a config that
/// only sets {"grid": {"side": 3}} gets the full 3 x 3 default map.
ExperimentConfig parse_config(const std::string& json_text);

/// Applies one dotted-path override such as "learner.epsilon=5" or
/// "grid.side=3" on top of a JSON document.  Values parse as JSON when
/// possible and fall back to strings.
std::string apply_override(const std::string& json_text,
                           const std::string& assignment);

}  // namespace cegal
