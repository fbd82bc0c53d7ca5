#include "cegal/cex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace cegal {

WeightedDigraph WeightedDigraph::from_dtmc(const Dtmc& dtmc) {
  WeightedDigraph g;
  g.n_states = dtmc.n_states;
  g.edges.resize(dtmc.n_states);
  for (int s = 0; s < dtmc.n_states; ++s) {
    g.edges[s].reserve(dtmc.rows[s].size());
    for (const auto& [t, p] : dtmc.rows[s])
      g.edges[s].emplace_back(t, std::log(1.0 / p));
  }
  return g;
}

double WeightedDigraph::path_weight(const std::vector<int>& path) const {
  double w = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const int u = path[i], v = path[i + 1];
    bool found = false;
    for (const auto& [t, weight] : edges.at(u)) {
      if (t == v) {
        w += weight;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::invalid_argument("path_weight: missing edge on path");
  }
  return w;
}

namespace {

long effective_hop_cap(long hops, int n_states) {
  const long depth_cap = 4L * n_states;
  return std::min(hops, depth_cap);
}

/// Lazy best-first enumeration of minimally satisfying paths in
/// nonincreasing probability order (ties lexicographic on the state
/// sequence).  Partial paths live in an arena as parent-linked nodes; a
/// path's probability only shrinks when extended, so the first time a
/// target-ending node is popped it is the best remaining evidence.
class PathEnumerator {
 public:
  PathEnumerator(const Dtmc& dtmc, const StateMask& phi1,
                 const StateMask& phi2, long hop_cap, long max_expansions)
      : dtmc_(dtmc), hop_cap_(hop_cap), max_expansions_(max_expansions) {
    const int n = dtmc.n_states;
    target_.assign(n, 0);
    transient_.assign(n, 0);
    for (int s = 0; s < n; ++s) {
      target_[s] = phi2[s];
      transient_[s] = phi1[s] && !phi2[s];
    }
    compute_reach();
    const int s0 = dtmc.initial_state;
    if (target_[s0]) {
      root_is_evidence_ = true;
    } else if (transient_[s0] && reach_[s0] && hop_cap_ >= 1) {
      push_node(1.0, s0, -1, 0);
    }
  }

  /// Next evidence, or nullopt when exhausted (or the expansion guard
  /// tripped; see guard_tripped()).
  std::optional<Evidence> next() {
    if (root_is_evidence_) {
      root_is_evidence_ = false;
      root_emitted_ = true;
      return Evidence{{dtmc_.initial_state}, 1.0};
    }
    if (root_emitted_) return std::nullopt;
    while (!heap_.empty()) {
      const int id = pop_node();
      const Node n = arena_[id];
      if (target_[n.state]) {
        Evidence ev;
        materialize(id, ev.path);
        ev.probability = n.prob;
        return ev;
      }
      if (++expansions_ > max_expansions_) {
        guard_tripped_ = true;
        return std::nullopt;
      }
      const int child_hops = n.hops + 1;
      if (child_hops > hop_cap_) continue;
      for (const auto& [t, p] : dtmc_.rows[n.state]) {
        if (target_[t]) {
          push_node(n.prob * p, t, id, child_hops);
        } else if (transient_[t] && reach_[t] && child_hops < hop_cap_) {
          push_node(n.prob * p, t, id, child_hops);
        }
      }
    }
    return std::nullopt;
  }

  bool guard_tripped() const { return guard_tripped_; }

 private:
  struct Node {
    double prob;
    int state;
    int parent;
    int hops;
  };

  void compute_reach() {
    const int n = dtmc_.n_states;
    reach_.assign(n, 0);
    std::vector<std::vector<int>> rev(n);
    for (int s = 0; s < n; ++s) {
      if (!transient_[s]) continue;
      for (const auto& [t, p] : dtmc_.rows[s]) rev[t].push_back(s);
    }
    std::deque<int> queue;
    for (int s = 0; s < n; ++s)
      if (target_[s]) queue.push_back(s);
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int u : rev[v]) {
        if (!reach_[u]) {
          reach_[u] = 1;
          queue.push_back(u);
        }
      }
    }
  }

  void materialize(int id, std::vector<int>& out) const {
    out.clear();
    for (int cur = id; cur != -1; cur = arena_[cur].parent)
      out.push_back(arena_[cur].state);
    std::reverse(out.begin(), out.end());
  }

  /// Max-heap order: higher probability first, then lexicographically
  /// smaller state sequence.  Returns true when a ranks below b.
  bool worse(int a, int b) {
    const Node& na = arena_[a];
    const Node& nb = arena_[b];
    if (na.prob != nb.prob) return na.prob < nb.prob;
    materialize(a, scratch_a_);
    materialize(b, scratch_b_);
    return scratch_a_ > scratch_b_;
  }

  void push_node(double prob, int state, int parent, int hops) {
    arena_.push_back(Node{prob, state, parent, hops});
    heap_.push_back(static_cast<int>(arena_.size()) - 1);
    std::push_heap(heap_.begin(), heap_.end(),
                   [this](int a, int b) { return worse(a, b); });
  }

  int pop_node() {
    std::pop_heap(heap_.begin(), heap_.end(),
                  [this](int a, int b) { return worse(a, b); });
    const int id = heap_.back();
    heap_.pop_back();
    return id;
  }

  const Dtmc& dtmc_;
  long hop_cap_;
  long max_expansions_;
  StateMask target_, transient_, reach_;
  std::vector<Node> arena_;
  std::vector<int> heap_;
  std::vector<int> scratch_a_, scratch_b_;
  bool root_is_evidence_ = false;
  bool root_emitted_ = false;
  bool guard_tripped_ = false;
  long expansions_ = 0;
};

/// Hop-constrained Viterbi over (state, hop): best probability of a
/// minimally satisfying path with at most `hops` hops.  Evidence paths
/// never need a cycle (cutting one strictly increases probability), so the
/// hop range is clipped to n_states - 1.  Returns 0 when no path exists.
double strongest_value(const Dtmc& dtmc, const StateMask& transient,
                       const StateMask& target, const StateMask& reach,
                       long hops) {
  const int n = dtmc.n_states;
  const int s0 = dtmc.initial_state;
  if (target[s0]) return 1.0;
  if (!transient[s0] || !reach[s0]) return 0.0;
  const long H = std::min(hops, static_cast<long>(n) - 1);
  std::vector<double> cur(n, 0.0), next(n, 0.0);
  std::vector<int> frontier, next_frontier;
  cur[s0] = 1.0;
  frontier.push_back(s0);
  double best = 0.0;
  for (long j = 1; j <= H && !frontier.empty(); ++j) {
    next_frontier.clear();
    for (int v : frontier) {
      const double base = cur[v];
      for (const auto& [t, p] : dtmc.rows[v]) {
        const double q = base * p;
        if (target[t]) {
          best = std::max(best, q);
        } else if (j < H && transient[t] && reach[t]) {
          if (next[t] == 0.0) next_frontier.push_back(t);
          next[t] = std::max(next[t], q);
        }
      }
      cur[v] = 0.0;
    }
    double frontier_max = 0.0;
    for (int t : next_frontier) frontier_max = std::max(frontier_max, next[t]);
    if (frontier_max <= best) {
      // Deeper paths only lose probability; the harvest cannot improve.
      for (int t : next_frontier) next[t] = 0.0;
      break;
    }
    cur.swap(next);
    frontier.swap(next_frontier);
  }
  return best;
}

}  // namespace

std::optional<Evidence> strongest_evidence(const Dtmc& dtmc,
                                           const StateMask& phi1,
                                           const StateMask& phi2, long hops) {
  if (hops < 0) throw std::invalid_argument("strongest_evidence: hops < 0");
  const int n = dtmc.n_states;
  if (static_cast<int>(phi1.size()) != n || static_cast<int>(phi2.size()) != n)
    throw std::invalid_argument("strongest_evidence: mask size mismatch");
  StateMask target(n, 0), transient(n, 0);
  for (int s = 0; s < n; ++s) {
    target[s] = phi2[s];
    transient[s] = phi1[s] && !phi2[s];
  }
  const long cap = effective_hop_cap(hops, n);
  // Value by dynamic program, path by ordered enumeration; the two must
  // agree, which doubles as an internal consistency check.
  StateMask reach(n, 0);
  {
    std::vector<std::vector<int>> rev(n);
    for (int s = 0; s < n; ++s) {
      if (!transient[s]) continue;
      for (const auto& [t, p] : dtmc.rows[s]) rev[t].push_back(s);
    }
    std::deque<int> queue;
    for (int s = 0; s < n; ++s)
      if (target[s]) queue.push_back(s);
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int u : rev[v])
        if (!reach[u]) {
          reach[u] = 1;
          queue.push_back(u);
        }
    }
  }
  const double value = strongest_value(dtmc, transient, target, reach, cap);
  if (value == 0.0) return std::nullopt;
  PathEnumerator en(dtmc, phi1, phi2, cap,
                    std::numeric_limits<long>::max());
  auto ev = en.next();
  if (!ev)
    throw std::logic_error("strongest_evidence: enumeration found no path");
  if (std::abs(ev->probability - value) > 1e-12 * std::max(1.0, value))
    throw std::logic_error(
        "strongest_evidence: dynamic program and enumeration disagree");
  return ev;
}

CexResult smallest_counterexample(const Dtmc& dtmc, const StateMask& phi1,
                                  const StateMask& phi2, long hops,
                                  double bound, int max_evidences,
                                  long max_expansions) {
  if (hops < 0)
    throw std::invalid_argument("smallest_counterexample: hops < 0");
  if (!(bound >= 0.0 && bound <= 1.0))
    throw std::invalid_argument(
        "smallest_counterexample: bound outside [0, 1]");
  if (max_evidences < 1)
    throw std::invalid_argument("smallest_counterexample: max_evidences < 1");
  const int n = dtmc.n_states;
  if (static_cast<int>(phi1.size()) != n || static_cast<int>(phi2.size()) != n)
    throw std::invalid_argument("smallest_counterexample: mask size mismatch");

  CexResult result;
  result.cex.bound = bound;
  if (bound >= 1.0) return result;  // nothing can exceed an upper bound of 1

  PathEnumerator en(dtmc, phi1, phi2, effective_hop_cap(hops, n),
                    max_expansions);
  while (true) {
    auto ev = en.next();
    if (!ev) {
      result.status = en.guard_tripped() ? CexStatus::kTruncated
                                         : CexStatus::kNoCounterexample;
      return result;
    }
    result.cex.total_probability += ev->probability;
    result.cex.evidences.push_back(std::move(*ev));
    if (result.cex.total_probability > bound) {
      result.status = CexStatus::kFound;
      return result;
    }
    if (static_cast<int>(result.cex.evidences.size()) >= max_evidences) {
      result.status = CexStatus::kTruncated;
      return result;
    }
  }
}

std::vector<double> counterexample_features(const Counterexample& cex,
                                            const FeatureMap& features,
                                            double discount) {
  if (cex.evidences.empty())
    throw std::invalid_argument("counterexample_features: empty evidence set");
  if (!(cex.total_probability > 0.0))
    throw std::invalid_argument(
        "counterexample_features: nonpositive total probability");
  std::vector<double> mu(features.dim(), 0.0);
  for (const Evidence& ev : cex.evidences) {
    const double weight = ev.probability / cex.total_probability;
    double scale = weight;
    for (int s : ev.path) {
      features.accumulate(mu, s, scale);
      scale *= discount;
    }
  }
  return mu;
}

UntilQuery until_query(const Dtmc& dtmc, const StateFormulaPtr& formula) {
  if (formula->kind != StateFormula::Kind::kProb)
    throw UnsupportedFormula("until_query: top-level formula must be P<=/P<");
  if (formula->cmp != Cmp::kLe && formula->cmp != Cmp::kLt)
    throw UnsupportedFormula("until_query: comparator must be <= or <");
  const auto& path = formula->path;
  if (path->kind == PathFormula::Kind::kNext)
    throw UnsupportedFormula(
        "until_query: next-step formulas have no path counterexample");
  UntilQuery q;
  q.phi1 = eval_state_set(dtmc, path->left);
  q.phi2 = eval_state_set(dtmc, path->right);
  q.hops = path->kind == PathFormula::Kind::kBoundedUntil
               ? path->hops
               : std::numeric_limits<long>::max();
  q.bound = formula->bound;
  return q;
}

std::string counterexample_to_json(const Counterexample& cex) {
  nlohmann::json j;
  j["evidences"] = nlohmann::json::array();
  for (const Evidence& ev : cex.evidences)
    j["evidences"].push_back({{"path", ev.path}, {"prob", ev.probability}});
  j["total"] = cex.total_probability;
  j["bound"] = cex.bound;
  return j.dump();
}

Counterexample counterexample_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Counterexample cex;
  for (const auto& e : j.at("evidences")) {
    Evidence ev;
    ev.path = e.at("path").get<std::vector<int>>();
    ev.probability = e.at("prob").get<double>();
    cex.evidences.push_back(std::move(ev));
  }
  cex.total_probability = j.at("total").get<double>();
  cex.bound = j.at("bound").get<double>();
  return cex;
}

}  // namespace cegal
