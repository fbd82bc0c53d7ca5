#include "cegal/expert.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cegal/rng.hpp"
#include "cegal/solve.hpp"

namespace cegal {

DemoSet generate_demos(const MarkovGame& game, const DecisionRule& rule,
                       int count, int horizon, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("demos: count < 1");
  if (horizon < 1) throw std::invalid_argument("demos: horizon < 1");
  rule.validate(game.n_states, game.n_actions);
  DemoSet demos;
  demos.horizon = horizon;
  demos.trajectories.resize(count);
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    Trajectory& traj = demos.trajectories[i];
    traj.states.reserve(horizon + 1);
    traj.actions.reserve(horizon);
    int s = game.initial_state;
    traj.states.push_back(s);
    for (int t = 0; t < horizon; ++t) {
      const int a = sample_sparse(rule.rows[s], uniform01(rng));
      s = sample_sparse(game.row(s, a), uniform01(rng));
      traj.actions.push_back(a);
      traj.states.push_back(s);
    }
  }
  return demos;
}

std::vector<double> estimate_mu(const DemoSet& demos,
                                const FeatureMap& features, double discount) {
  if (demos.trajectories.empty())
    throw std::invalid_argument("estimate_mu: no trajectories");
  std::vector<double> mu(features.dim(), 0.0);
  for (const Trajectory& traj : demos.trajectories) {
    double scale = 1.0;
    for (int s : traj.states) {
      features.accumulate(mu, s, scale);
      scale *= discount;
    }
  }
  const double inv = 1.0 / static_cast<double>(demos.trajectories.size());
  for (double& x : mu) x *= inv;
  return mu;
}

void write_demos(const DemoSet& demos, std::ostream& out) {
  for (const Trajectory& traj : demos.trajectories) {
    nlohmann::json line = nlohmann::json::array();
    for (std::size_t t = 0; t < traj.actions.size(); ++t)
      line.push_back({traj.states[t], traj.actions[t]});
    line.push_back({traj.states.back(), -1});
    out << line.dump() << '\n';
  }
}

DemoSet read_demos(std::istream& in) {
  DemoSet demos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    Trajectory traj;
    for (const auto& pair : j) {
      if (!pair.is_array() || pair.size() != 2)
        throw std::runtime_error("demos: malformed step");
      traj.states.push_back(pair[0].get<int>());
      const int a = pair[1].get<int>();
      if (a >= 0) traj.actions.push_back(a);
    }
    if (traj.states.empty() ||
        traj.states.size() != traj.actions.size() + 1)
      throw std::runtime_error("demos: malformed trajectory");
    demos.trajectories.push_back(std::move(traj));
  }
  if (!demos.trajectories.empty())
    demos.horizon = static_cast<int>(demos.trajectories.front().actions.size());
  return demos;
}

std::string demos_to_string(const DemoSet& demos) {
  std::ostringstream os;
  write_demos(demos, os);
  return os.str();
}

DemoSet demos_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_demos(is);
}

}  // namespace cegal
