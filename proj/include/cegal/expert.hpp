#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cegal/model.hpp"

namespace cegal {

/// One demonstration: the visited joint states and the joint action taken
/// in each of them.  states has one more entry than actions (the final
/// state closes the trajectory).
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
};

struct DemoSet {
  std::vector<Trajectory> trajectories;
  int horizon = 0;  // transitions per trajectory
};

/// Rolls out a rule for `count` trajectories of `horizon` transitions each,
/// starting from the game's initial state.  Rollout i draws from a
/// generator seeded by (seed, i), so the set is reproducible and
/// independent of evaluation order.
DemoSet generate_demos(const MarkovGame& game, const DecisionRule& rule,
                       int count, int horizon, std::uint64_t seed);

/// Empirical feature expectation of a demo set: the average over
/// trajectories of sum_t discount^t f(s_t).
std::vector<double> estimate_mu(const DemoSet& demos,
                                const FeatureMap& features, double discount);

/// JSON lines: one trajectory per line as [[state, action], ...,
/// [final_state, -1]].
void write_demos(const DemoSet& demos, std::ostream& out);
DemoSet read_demos(std::istream& in);
std::string demos_to_string(const DemoSet& demos);
DemoSet demos_from_string(const std::string& text);

}  // namespace cegal
