#include "cegal/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cegal/rng.hpp"

namespace cegal {

int sample_sparse(const SparseRow& row, double u) {
  double acc = 0.0;
  for (const auto& [idx, p] : row) {
    acc += p;
    if (u < acc) return idx;
  }
  return row.back().first;  // guard against rounding at the top end
}

ValueIterationResult value_iteration(const MarkovGame& game,
                                     const std::vector<double>& reward) {
  if (static_cast<int>(reward.size()) != game.n_states)
    throw std::invalid_argument("value_iteration: reward size != n_states");
  const int n = game.n_states;
  const int m = game.n_actions;
  std::vector<double> v(n, 0.0), next(n, 0.0);
  long sweeps = 0;
  while (true) {
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      const std::size_t base = static_cast<std::size_t>(s) * m;
      for (int a = 0; a < m; ++a) {
        double acc = 0.0;
        for (const auto& [t, p] : game.transitions[base + a]) acc += p * v[t];
        if (acc > best) best = acc;
      }
      next[s] = reward[s] + game.discount * best;
    }
    ++sweeps;
    double change = 0.0;
    for (int s = 0; s < n; ++s)
      change = std::max(change, std::abs(next[s] - v[s]));
    v.swap(next);
    if (change < kValueIterationTol) break;
    if (sweeps >= kValueIterationSweepCap)
      throw std::runtime_error("value_iteration: sweep cap exceeded");
  }

  std::vector<int> greedy(n, 0);
  for (int s = 0; s < n; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    const std::size_t base = static_cast<std::size_t>(s) * m;
    for (int a = 0; a < m; ++a) {
      double acc = 0.0;
      for (const auto& [t, p] : game.transitions[base + a]) acc += p * v[t];
      if (acc > best) {
        best = acc;
        best_a = a;
      }
    }
    greedy[s] = best_a;
  }
  ValueIterationResult out;
  out.rule = DecisionRule::deterministic(greedy);
  out.values = std::move(v);
  out.sweeps = sweeps;
  return out;
}

std::vector<double> feature_expectations_exact(const Dtmc& dtmc,
                                               const FeatureMap& features,
                                               double discount) {
  if (features.n_states() != dtmc.n_states)
    throw std::invalid_argument("features: state count mismatch");
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("features: discount outside [0, 1)");
  const int n = dtmc.n_states;
  // Reverse adjacency for occupancy sweeps rho' = e_s0 + discount * P^T rho.
  std::vector<std::vector<std::pair<int, double>>> rev(n);
  for (int s = 0; s < n; ++s)
    for (const auto& [t, p] : dtmc.rows[s]) rev[t].emplace_back(s, p);

  std::vector<double> rho(n, 0.0), next(n, 0.0);
  long sweeps = 0;
  while (true) {
    for (int t = 0; t < n; ++t) {
      double acc = 0.0;
      for (const auto& [s, p] : rev[t]) acc += p * rho[s];
      next[t] = discount * acc;
    }
    next[dtmc.initial_state] += 1.0;
    ++sweeps;
    double change = 0.0;
    for (int t = 0; t < n; ++t)
      change = std::max(change, std::abs(next[t] - rho[t]));
    rho.swap(next);
    if (change < kFeatureSweepTol) break;
    if (sweeps >= kFeatureSweepCap)
      throw std::runtime_error("feature_expectations: sweep cap exceeded");
  }

  if (features.is_one_hot()) return rho;
  std::vector<double> mu(features.dim(), 0.0);
  for (int s = 0; s < n; ++s)
    if (rho[s] != 0.0) features.accumulate(mu, s, rho[s]);
  return mu;
}

std::vector<double> feature_expectations_exact(const MarkovGame& game,
                                               const DecisionRule& rule,
                                               const FeatureMap& features) {
  return feature_expectations_exact(induce_dtmc(game, rule), features,
                                    game.discount);
}

std::vector<double> feature_expectations_mc(const MarkovGame& game,
                                            const DecisionRule& rule,
                                            const FeatureMap& features,
                                            int rollouts, int horizon,
                                            std::uint64_t seed) {
  if (rollouts < 1)
    throw std::invalid_argument("feature_expectations_mc: rollouts < 1");
  if (horizon < 0)
    throw std::invalid_argument("feature_expectations_mc: horizon < 0");
  rule.validate(game.n_states, game.n_actions);
  std::vector<double> mu(features.dim(), 0.0);
  for (int i = 0; i < rollouts; ++i) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    int s = game.initial_state;
    double scale = 1.0;
    for (int t = 0;; ++t) {
      features.accumulate(mu, s, scale);
      if (t == horizon) break;
      const int a = sample_sparse(rule.rows[s], uniform01(rng));
      s = sample_sparse(game.row(s, a), uniform01(rng));
      scale *= game.discount;
    }
  }
  const double inv = 1.0 / rollouts;
  for (double& x : mu) x *= inv;
  return mu;
}

int mc_horizon(double discount, double tail_mass) {
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("mc_horizon: discount outside [0, 1)");
  if (discount == 0.0) return 1;
  return static_cast<int>(
      std::ceil(std::log(tail_mass) / std::log(discount)));
}

NashQResult nash_q_learning(const MarkovGame& game,
                            const std::vector<double>& reward,
                            const NashQParams& params) {
  if (static_cast<int>(reward.size()) != game.n_states)
    throw std::invalid_argument("nash_q: reward size != n_states");
  if (params.episodes < 1 || params.steps_per_episode < 1)
    throw std::invalid_argument("nash_q: empty schedule");
  if (!(params.exploration >= 0.0 && params.exploration <= 1.0))
    throw std::invalid_argument("nash_q: exploration outside [0, 1]");
  const int n = game.n_states;
  const int m = game.n_actions;
  const std::size_t cells = static_cast<std::size_t>(n) * m;

  QTableSet q;
  q.tables.assign(game.n_agents, std::vector<double>(cells, 0.0));
  q.visit_counts.assign(cells, 0.0);
  std::vector<double>& q0 = q.tables.front();

  auto greedy_action = [&](int s) {
    const std::size_t base = static_cast<std::size_t>(s) * m;
    int best = 0;
    double best_q = q0[base];
    for (int a = 1; a < m; ++a) {
      if (q0[base + a] > best_q) {
        best_q = q0[base + a];
        best = a;
      }
    }
    return best;
  };

  std::mt19937_64 rng(mix_seed(params.seed, 0));
  for (long ep = 0; ep < params.episodes; ++ep) {
    int s = game.initial_state;
    for (int step = 0; step < params.steps_per_episode; ++step) {
      int a;
      if (uniform01(rng) < params.exploration) {
        a = uniform_int(rng, m);
      } else {
        a = greedy_action(s);
      }
      const int t = sample_sparse(game.row(s, a), uniform01(rng));
      // Identical-interest Nash value of the next stage: max over joint
      // actions, the same for every agent.
      const std::size_t tbase = static_cast<std::size_t>(t) * m;
      double nash = q0[tbase];
      for (int b = 1; b < m; ++b) nash = std::max(nash, q0[tbase + b]);
      const std::size_t cell = static_cast<std::size_t>(s) * m + a;
      const double alpha = 1.0 / (1.0 + q.visit_counts[cell]);
      const double target = reward[s] + game.discount * nash;
      for (auto& table : q.tables)
        table[cell] = (1.0 - alpha) * table[cell] + alpha * target;
      q.visit_counts[cell] += 1.0;
      s = t;
    }
  }

  NashQResult out;
  std::vector<int> greedy(n, 0);
  out.values.assign(n, 0.0);
  for (int s = 0; s < n; ++s) {
    const int a = greedy_action(s);
    greedy[s] = a;
    out.values[s] = q0[static_cast<std::size_t>(s) * m + a];
  }
  out.greedy = DecisionRule::deterministic(greedy);
  out.q = std::move(q);
  return out;
}

}  // namespace cegal
