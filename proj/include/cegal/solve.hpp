#pragma once

#include <cstdint>
#include <vector>

#include "cegal/dtmc.hpp"
#include "cegal/model.hpp"

namespace cegal {

/// Samples an index from a sparse probability row given u ~ U[0, 1).
int sample_sparse(const SparseRow& row, double u);

inline constexpr double kValueIterationTol = 1e-8;
inline constexpr long kValueIterationSweepCap = 100000;

struct ValueIterationResult {
  DecisionRule rule;            // greedy, deterministic (ties: lowest index)
  std::vector<double> values;   // V(s)
  long sweeps = 0;
};

/// Synchronous value iteration for a state-based reward:
/// V_{k+1}(s) = reward(s) + discount * max_a sum_s' P(s'|s,a) V_k(s').
/// Stops when the sup-norm change drops below kValueIterationTol; throws
/// std::runtime_error if the sweep cap is exceeded.
ValueIterationResult value_iteration(const MarkovGame& game,
                                     const std::vector<double>& reward);

inline constexpr double kFeatureSweepTol = 1e-10;
inline constexpr long kFeatureSweepCap = 1000000;

/// Exact discounted feature expectation of a chain from its initial state:
/// the fixpoint of x(s) = f(s) + discount * sum_s' P(s,s') x(s'), evaluated
/// at the initial state.  Computed as the discounted state occupancy vector
/// (swept to sup-norm < kFeatureSweepTol) times the feature matrix, which
/// is the same truncated series evaluated factor by factor.
std::vector<double> feature_expectations_exact(const Dtmc& dtmc,
                                               const FeatureMap& features,
                                               double discount);

/// Convenience overload inducing the rule's chain first.
std::vector<double> feature_expectations_exact(const MarkovGame& game,
                                               const DecisionRule& rule,
                                               const FeatureMap& features);

/// Monte-Carlo feature expectation: m rollouts of horizon T (T transitions,
/// so states s_0 .. s_T contribute discount^t * f(s_t)).  Each rollout uses
/// an independent generator seeded from (seed, rollout index), so the
/// result does not depend on scheduling.
std::vector<double> feature_expectations_mc(const MarkovGame& game,
                                            const DecisionRule& rule,
                                            const FeatureMap& features,
                                            int rollouts, int horizon,
                                            std::uint64_t seed);

/// Horizon for which discount^T first drops below tail_mass.
int mc_horizon(double discount, double tail_mass = 1e-6);

struct NashQParams {
  long episodes = 20000;
  int steps_per_episode = 50;
  double exploration = 0.1;  // epsilon-greedy on the joint action
  std::uint64_t seed = 1;
};

/// One Q-table per agent over (joint state, joint action).
struct QTableSet {
  /// tables[agent][s * n_actions + a]
  std::vector<std::vector<double>> tables;
  std::vector<double> visit_counts;  // per (s, a), shared across agents
};

struct NashQResult {
  QTableSet q;
  DecisionRule greedy;           // from agent 0's table, ties lowest index
  std::vector<double> values;    // max_a Q_0(s, a)
};

/// Tabular Nash-Q learning for identical-interest games: every agent shares
/// the joint reward, so the Nash value of the stage game is the maximum over
/// joint actions and all tables receive the same update
/// Q_{t+1}(s, a) = (1 - alpha_t) Q_t(s, a)
///              + alpha_t (r(s) + discount * max_b Q_t(s', b))
/// with alpha_t = 1 / (1 + visits(s, a)).  Behaviour is epsilon-greedy over
/// joint actions; episodes restart from the initial state.
NashQResult nash_q_learning(const MarkovGame& game,
                            const std::vector<double>& reward,
                            const NashQParams& params);

}  // namespace cegal
