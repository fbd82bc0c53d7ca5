// Experiment pipelines behind the command-line modes: demo generation,
// plain apprenticeship, the counterexample-guided loop, verification,
// explicit-chain export, and the scalability benchmark.  Each mode writes
// its artifacts under config.output_dir and prints a short summary; the
// pipeline pieces are exposed separately so tests can drive them without
// touching the filesystem.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cegal/config.hpp"
#include "cegal/expert.hpp"
#include "cegal/learner.hpp"

namespace cegal {

/// Everything the modes share: the built game, one-hot features over joint
/// states, the parsed property, and the ground-truth expert rule.
struct Workbench {
  ExperimentConfig config;
  GridWorldSpec spec;
  MarkovGame game;
  FeatureMap features = FeatureMap::one_hot(1);
  std::vector<double> ground_truth;
  StateFormulaPtr property;
  DecisionRule expert;
};

Workbench make_workbench(const ExperimentConfig& config);

DemoSet make_demos(const Workbench& wb);
std::vector<double> demo_mu(const Workbench& wb, const DemoSet& demos);

/// Exact discounted expected return of the rule's chain under a state
/// reward (evaluated at the initial state).
double expected_return(const MarkovGame& game, const DecisionRule& rule,
                       const std::vector<double>& reward);

/// P(true U<=hops "unsafe<i>") at the initial state, one entry per agent.
std::vector<double> per_agent_unsafe(const MarkovGame& game,
                                     const DecisionRule& rule, long hops);

/// Hop bound of the property's until operator (LONG_MAX when unbounded).
long property_hops(const Workbench& wb);

struct PipelineAL {
  ALResult result;
  Verdict joint;
  std::vector<double> per_agent;
};
PipelineAL run_al_pipeline(const Workbench& wb,
                           const std::vector<double>& mu_E);

struct PipelineCegal {
  CegalResult result;
  DecisionRule initial_rule;
  std::vector<double> per_agent;
  double initial_return = 0.0;
  double final_return = 0.0;
};
PipelineCegal run_cegal_pipeline(const Workbench& wb,
                                 const std::vector<double>& mu_E);

std::string rule_to_json(const DecisionRule& rule);
DecisionRule rule_from_json(const std::string& text);

/// Per-agent per-cell view of a joint state reward: cell value is the mean
/// over joint states in which the agent occupies that cell.  One side*side
/// grid per agent, as CSV rows.
std::string reward_grid_csv(const GridWorldSpec& spec,
                            const std::vector<double>& joint_reward,
                            int agent);

struct BenchRow {
  int side = 0;
  int joint_states = 0;
  double rule_s = 0.0;
  double feature_s = 0.0;
  double checking_s = 0.0;
  double cex_s = 0.0;
};

/// Times one learner iteration's four phases (rule computation, feature
/// computation, model checking, counterexample generation) on the default
/// map at each grid size, averaged over `repeats` runs.
std::vector<BenchRow> run_bench(const ExperimentConfig& base,
                                const std::vector<int>& sides,
                                int repeats = 3);

std::string bench_table(const std::vector<BenchRow>& rows);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Dispatches one mode (demos | al | cegal | verify | export | bench),
/// writing artifacts under config.output_dir.  Returns a process exit code;
/// errors propagate as exceptions for the caller to render.
int run_mode(const std::string& mode, const ExperimentConfig& config,
             bool bench_full, std::ostream& out);

}  // namespace cegal
