#include "cegal/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace cegal {

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

void check_dims(const Vec& mu_E, const std::vector<Vec>& mus,
                const char* what) {
  for (const Vec& m : mus)
    if (m.size() != mu_E.size())
      throw std::invalid_argument(std::string(what) +
                                  ": feature dimension mismatch");
}

/// Vertex of the candidate difference polytope, identified by an opaque
/// key so the Frank-Wolfe active set can merge repeated atoms.
struct VertexRef {
  std::int64_t key = 0;
  Vec v;
};

/// Explicit difference set {mu_E - mus[i]}.
class ExplicitSource {
 public:
  ExplicitSource(const Vec& mu_E, const std::vector<Vec>& mus) {
    verts_.reserve(mus.size());
    for (const Vec& m : mus) {
      Vec d(mu_E.size());
      for (std::size_t j = 0; j < d.size(); ++j) d[j] = mu_E[j] - m[j];
      verts_.push_back(std::move(d));
    }
  }

  VertexRef lmo(const Vec& g) const {
    int best = 0;
    double best_val = dot(g, verts_[0]);
    for (std::size_t i = 1; i < verts_.size(); ++i) {
      const double val = dot(g, verts_[i]);
      if (val < best_val) {
        best_val = val;
        best = static_cast<int>(i);
      }
    }
    return {best, verts_[best]};
  }

  double max_norm() const {
    double m = 0.0;
    for (const Vec& v : verts_) m = std::max(m, norm(v));
    return m;
  }

  std::vector<Vec> seed_dirs() const {
    std::vector<Vec> dirs;
    const std::size_t start = verts_.size() > 64 ? verts_.size() - 64 : 0;
    for (std::size_t i = start; i < verts_.size(); ++i)
      dirs.push_back(verts_[i]);
    return dirs;
  }

 private:
  std::vector<Vec> verts_;
};

/// Implicit product set k (mu_E - p) + (1 - k) (q - c) over p, q in the
/// safe expectations and c in the counterexample expectations.  The linear
/// minimization separates over the triple.
class CombinedSource {
 public:
  CombinedSource(const Vec& mu_E, const std::vector<Vec>& safe,
                 const std::vector<Vec>& cex, double k)
      : mu_E_(mu_E), safe_(safe), cex_(cex), k_(k) {
    plain_ = cex_.empty() || k_ >= 1.0;
  }

  VertexRef lmo(const Vec& g) const {
    const int pi = arg_extreme(g, safe_, true);
    int qi = 0, ci = 0;
    if (!plain_) {
      qi = arg_extreme(g, safe_, false);
      ci = arg_extreme(g, cex_, true);
    }
    return assemble(pi, qi, ci);
  }

  VertexRef assemble(int pi, int qi, int ci) const {
    const std::size_t d = mu_E_.size();
    Vec v(d);
    if (plain_) {
      for (std::size_t j = 0; j < d; ++j) v[j] = mu_E_[j] - safe_[pi][j];
    } else {
      const double k = k_, l = 1.0 - k_;
      for (std::size_t j = 0; j < d; ++j)
        v[j] = k * (mu_E_[j] - safe_[pi][j]) + l * (safe_[qi][j] - cex_[ci][j]);
    }
    const std::int64_t s = static_cast<std::int64_t>(safe_.size());
    const std::int64_t c = static_cast<std::int64_t>(std::max<std::size_t>(
        cex_.size(), 1));
    return {(static_cast<std::int64_t>(pi) * s + qi) * c + ci, std::move(v)};
  }

  double max_norm() const {
    double mu_norm = norm(mu_E_), safe_max = 0.0, cex_max = 0.0;
    for (const Vec& v : safe_) safe_max = std::max(safe_max, norm(v));
    for (const Vec& v : cex_) cex_max = std::max(cex_max, norm(v));
    if (plain_) return mu_norm + safe_max;
    return k_ * (mu_norm + safe_max) + (1.0 - k_) * (safe_max + cex_max);
  }

  std::vector<Vec> seed_dirs() const {
    std::vector<Vec> dirs;
    const std::size_t start = safe_.size() > 32 ? safe_.size() - 32 : 0;
    for (std::size_t p = start; p < safe_.size(); ++p) {
      Vec d(mu_E_.size());
      for (std::size_t j = 0; j < d.size(); ++j) d[j] = mu_E_[j] - safe_[p][j];
      if (!plain_) {
        Vec neg(d.size());
        for (std::size_t j = 0; j < d.size(); ++j) neg[j] = -d[j];
        dirs.push_back(lmo(neg).v);
      }
      dirs.push_back(std::move(d));
    }
    return dirs;
  }

 private:
  static int arg_extreme(const Vec& g, const std::vector<Vec>& vs, bool max) {
    int best = 0;
    double best_val = dot(g, vs[0]);
    for (std::size_t i = 1; i < vs.size(); ++i) {
      const double val = dot(g, vs[i]);
      if (max ? val > best_val : val < best_val) {
        best_val = val;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  const Vec& mu_E_;
  const std::vector<Vec>& safe_;
  const std::vector<Vec>& cex_;
  double k_;
  bool plain_;
};

constexpr int kSubgradientIters = 2000;
constexpr long kFrankWolfeCap = 50000;

template <class Source>
MaxMarginResult solve_max_margin(const Source& src, std::size_t dim) {
  MaxMarginResult out;
  const double scale = std::max(1.0, src.max_norm());

  // Restart direction: the best single difference (or assembled vertex).
  Vec best_w;
  double best_margin = -std::numeric_limits<double>::infinity();
  for (const Vec& d : src.seed_dirs()) {
    const double dn = norm(d);
    if (dn < 1e-15 * scale) continue;
    Vec w(d);
    for (double& x : w) x /= dn;
    const double m = dot(w, src.lmo(w).v);
    if (m > best_margin) {
      best_margin = m;
      best_w = std::move(w);
    }
  }
  if (best_w.empty()) {
    // Every candidate direction vanishes: mu_E lies on the candidate set.
    out.weights.assign(dim, 0.0);
    if (dim > 0) out.weights[0] = 1.0;
    out.delta = 0.0;
    out.hull_distance = 0.0;
    return out;
  }

  // Projected subgradient ascent on the unit ball, step 1/sqrt(t).
  Vec w = best_w;
  for (int t = 1; t <= kSubgradientIters; ++t) {
    const VertexRef active = src.lmo(w);
    const double margin = dot(w, active.v);
    if (margin > best_margin) {
      best_margin = margin;
      best_w = w;
    }
    const double step = 1.0 / std::sqrt(static_cast<double>(t));
    for (std::size_t j = 0; j < dim; ++j) w[j] += step * active.v[j];
    const double wn = norm(w);
    if (wn > 1.0)
      for (double& x : w) x /= wn;
  }

  // The tracked direction may sit strictly inside the ball; margins scale
  // linearly, so push it to the sphere (scaling the recorded margin only
  // when that is an improvement).
  {
    const double bn = norm(best_w);
    if (bn > 0.0 && bn < 1.0) {
      for (double& x : best_w) x /= bn;
      if (best_margin > 0.0) best_margin /= bn;
    }
  }

  // Pairwise Frank-Wolfe for the minimum-norm point of the vertex hull;
  // its norm equals the max-margin optimum.
  struct Atom {
    std::int64_t key;
    Vec v;
    double weight;
  };
  std::vector<Atom> atoms;
  {
    VertexRef v0 = src.lmo(best_w);
    atoms.push_back({v0.key, std::move(v0.v), 1.0});
  }
  Vec p = atoms.front().v;
  const double gap_tol = 1e-14 * scale * scale;
  double best_gap = std::numeric_limits<double>::infinity();
  long since_improvement = 0;
  for (long it = 0; it < kFrankWolfeCap; ++it) {
    VertexRef s = src.lmo(p);
    const double gap = dot(p, p) - dot(p, s.v);
    if (gap <= gap_tol) break;
    if (gap < best_gap * (1.0 - 1e-3)) {
      best_gap = gap;
      since_improvement = 0;
    } else if (++since_improvement > 2000) {
      break;  // numerically stalled
    }
    // Away atom: the active vertex most aligned with the gradient.
    std::size_t away = 0;
    double away_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const double val = dot(p, atoms[i].v);
      if (val > away_val) {
        away_val = val;
        away = i;
      }
    }
    Vec d(dim);
    for (std::size_t j = 0; j < dim; ++j) d[j] = s.v[j] - atoms[away].v[j];
    const double dn = dot(d, d);
    if (dn <= 0.0) break;
    double step = (away_val - dot(p, s.v)) / dn;
    const double max_step = atoms[away].weight;
    step = std::clamp(step, 0.0, max_step);
    if (step <= 0.0) break;
    for (std::size_t j = 0; j < dim; ++j) p[j] += step * d[j];
    atoms[away].weight -= step;
    bool merged = false;
    for (Atom& a : atoms) {
      if (a.key == s.key) {
        a.weight += step;
        merged = true;
        break;
      }
    }
    if (!merged) atoms.push_back({s.key, std::move(s.v), step});
    if (atoms[away].weight <= 1e-16)
      atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(away));
    if ((it & 1023) == 1023) {
      // Rebuild p from the atom weights to cancel drift.
      std::fill(p.begin(), p.end(), 0.0);
      for (const Atom& a : atoms)
        for (std::size_t j = 0; j < dim; ++j) p[j] += a.weight * a.v[j];
    }
  }

  const double hull = norm(p);
  out.hull_distance = hull;
  if (hull <= 1e-5 * scale) {
    // The hull (numerically) contains the expert point; no unit direction
    // can do better than the hull distance itself.
    out.weights = best_w;
    out.delta = hull;
    return out;
  }
  Vec w_fw(p);
  for (double& x : w_fw) x /= hull;
  const double margin_fw = dot(w_fw, src.lmo(w_fw).v);
  if (margin_fw >= best_margin) {
    out.weights = std::move(w_fw);
    out.delta = margin_fw;
  } else {
    out.weights = best_w;
    out.delta = best_margin;
  }
  return out;
}

}  // namespace

MaxMarginResult max_margin_weights(const std::vector<double>& mu_E,
                                   const std::vector<std::vector<double>>& mus) {
  if (mus.empty())
    throw std::invalid_argument("max_margin: no candidate expectations");
  check_dims(mu_E, mus, "max_margin");
  const ExplicitSource src(mu_E, mus);
  return solve_max_margin(src, mu_E.size());
}

MaxMarginResult combined_weight_update(
    const std::vector<double>& mu_E,
    const std::vector<std::vector<double>>& safe_mus,
    const std::vector<std::vector<double>>& cex_mus, double k) {
  if (safe_mus.empty())
    throw std::invalid_argument("combined_weight_update: no safe candidates");
  if (!(k >= 0.0 && k <= 1.0))
    throw std::invalid_argument("combined_weight_update: k outside [0, 1]");
  check_dims(mu_E, safe_mus, "combined_weight_update");
  check_dims(mu_E, cex_mus, "combined_weight_update");
  const CombinedSource src(mu_E, safe_mus, cex_mus, k);
  return solve_max_margin(src, mu_E.size());
}

double vector_distance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("vector_distance: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

ALStepResult al_step(const MarkovGame& game, const FeatureMap& features,
                     const std::vector<double>& mu_E, const ALState& state,
                     double epsilon) {
  if (state.mus.empty())
    throw std::invalid_argument("al_step: empty candidate pool");
  ALStepResult out;
  MaxMarginResult mm = max_margin_weights(mu_E, state.mus);
  out.weights = mm.weights;
  out.delta = mm.delta;
  out.hull_distance = mm.hull_distance;
  if (mm.delta < epsilon) {
    out.terminated = true;
    return out;
  }
  const std::vector<double> reward = reward_from_weights(mm.weights, features);
  ValueIterationResult vi = value_iteration(game, reward);
  out.mu = feature_expectations_exact(game, vi.rule, features);
  out.rule = std::move(vi.rule);
  return out;
}

ALResult al_run(const MarkovGame& game, const FeatureMap& features,
                const std::vector<double>& mu_E, const ALParams& params) {
  if (params.max_iter < 1)
    throw std::invalid_argument("al_run: max_iter < 1");
  ALState state;
  state.rules.push_back(DecisionRule::uniform(game.n_states, game.n_actions));
  state.mus.push_back(
      feature_expectations_exact(game, state.rules.back(), features));

  ALResult out;
  for (int iter = 1; iter <= params.max_iter; ++iter) {
    ALStepResult step = al_step(game, features, mu_E, state, params.epsilon);
    out.weights = step.weights;
    out.iterations = iter;
    ALIteration rec;
    rec.iter = iter;
    rec.delta = step.delta;
    rec.hull_distance = step.hull_distance;
    if (step.terminated) {
      rec.distance = vector_distance(mu_E, state.mus.back());
      out.log.push_back(rec);
      out.converged = true;
      break;
    }
    rec.distance = vector_distance(mu_E, step.mu);
    out.log.push_back(rec);
    state.rules.push_back(std::move(step.rule));
    state.mus.push_back(std::move(step.mu));
  }

  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.mus.size(); ++i) {
    const double d = vector_distance(mu_E, state.mus[i]);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  out.rule = state.rules[best];
  out.mu = state.mus[best];
  return out;
}

const char* to_string(CegalTermination t) {
  switch (t) {
    case CegalTermination::kInitClose: return "init_close";
    case CegalTermination::kEpsilonClose: return "epsilon_close";
    case CegalTermination::kBracketClosed: return "bracket_closed";
    case CegalTermination::kMaxIter: return "max_iter";
  }
  return "unknown";
}

DecisionRule pessimistic_safe_rule(const MarkovGame& game) {
  std::vector<double> reward(game.n_states, 0.0);
  const auto goal = game.labels.find("goal");
  if (goal != game.labels.end())
    for (int s : goal->second) reward[s] = 1.0;
  const auto unsafe = game.labels.find("unsafe");
  if (unsafe != game.labels.end())
    for (int s : unsafe->second) reward[s] = -1.0;
  return value_iteration(game, reward).rule;
}

CegalResult cegal_run(const MarkovGame& game, const FeatureMap& features,
                      const std::vector<double>& mu_E,
                      const StateFormulaPtr& property,
                      const DecisionRule& initial_safe_rule,
                      const CegalParams& params) {
  if (params.max_iter < 1)
    throw std::invalid_argument("cegal_run: max_iter < 1");
  if (!(params.sigma > 0.0))
    throw std::invalid_argument("cegal_run: sigma must be positive");
  if (!(params.alpha >= 0.0 && params.alpha < 1.0))
    throw std::invalid_argument("cegal_run: alpha outside [0, 1)");

  const Verdict init_verdict = verify(game, initial_safe_rule, property);
  if (!init_verdict.satisfied)
    throw std::invalid_argument(
        "cegal_run: the initial rule does not satisfy the property");

  CegalResult out;
  std::vector<DecisionRule> safe_rules{initial_safe_rule};
  std::vector<std::vector<double>> safe_mus{
      feature_expectations_exact(game, initial_safe_rule, features)};
  std::vector<double> safe_dists{vector_distance(mu_E, safe_mus[0])};
  std::vector<std::vector<double>> safe_weights{{}};

  auto finish_with_best = [&](CegalTermination why) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < safe_dists.size(); ++i)
      if (safe_dists[i] < safe_dists[best]) best = i;
    out.rule = safe_rules[best];
    out.mu = safe_mus[best];
    out.weights = safe_weights[best];
    out.termination = why;
    out.final_verdict = verify(game, out.rule, property);
    out.safe_rules = static_cast<int>(safe_rules.size());
    return out;
  };

  if (safe_dists[0] <= params.epsilon) {
    return finish_with_best(CegalTermination::kInitClose);
  }

  std::vector<std::vector<double>> cex_mus;
  double inf = 0.0, k = 1.0;
  constexpr double kSup = 1.0;

  // First candidate: the plain apprenticeship step guided by mu_E alone.
  MaxMarginResult mm = combined_weight_update(mu_E, safe_mus, cex_mus, k);
  ValueIterationResult vi =
      value_iteration(game, reward_from_weights(mm.weights, features));
  DecisionRule rule = std::move(vi.rule);
  std::vector<double> rule_weights = mm.weights;
  std::vector<double> mu = feature_expectations_exact(game, rule, features);

  for (int iter = 1; iter <= params.max_iter; ++iter) {
    const Dtmc dtmc = induce_dtmc(game, rule);
    const Verdict verdict = verify_dtmc(dtmc, property);
    const double dist = vector_distance(mu_E, mu);

    CegalIteration rec;
    rec.iter = iter;
    rec.satisfied = verdict.satisfied;
    rec.probability = verdict.probability;
    rec.distance = dist;

    if (verdict.satisfied) {
      safe_rules.push_back(rule);
      safe_mus.push_back(mu);
      safe_dists.push_back(dist);
      safe_weights.push_back(rule_weights);
      if (dist <= params.epsilon) {
        rec.k = k;
        rec.inf = inf;
        out.log.push_back(rec);
        out.rule = std::move(rule);
        out.mu = std::move(mu);
        out.weights = std::move(rule_weights);
        out.termination = CegalTermination::kEpsilonClose;
        out.final_verdict = verdict;
        out.safe_rules = static_cast<int>(safe_rules.size());
        out.counterexamples = static_cast<int>(cex_mus.size());
        return out;
      }
      inf = k;
      k = kSup;
    } else {
      const UntilQuery q = until_query(dtmc, property);
      const CexResult cexr =
          smallest_counterexample(dtmc, q.phi1, q.phi2, q.hops, q.bound,
                                  params.max_evidences);
      if (cexr.cex.evidences.empty())
        throw std::runtime_error(
            "cegal_run: refuted rule yielded no counterexample evidence");
      rec.cex_evidences = static_cast<int>(cexr.cex.evidences.size());
      cex_mus.push_back(
          counterexample_features(cexr.cex, features, game.discount));
      if (std::abs(k - inf) <= params.sigma) {
        rec.k = k;
        rec.inf = inf;
        out.log.push_back(rec);
        out.counterexamples = static_cast<int>(cex_mus.size());
        return finish_with_best(CegalTermination::kBracketClosed);
      }
      k = params.alpha * inf + (1.0 - params.alpha) * k;
    }
    rec.k = k;
    rec.inf = inf;

    mm = combined_weight_update(mu_E, safe_mus, cex_mus, k);
    rec.delta = mm.delta;
    rec.hull_distance = mm.hull_distance;
    out.log.push_back(rec);

    vi = value_iteration(game, reward_from_weights(mm.weights, features));
    rule = std::move(vi.rule);
    rule_weights = mm.weights;
    mu = feature_expectations_exact(game, rule, features);
  }

  out.counterexamples = static_cast<int>(cex_mus.size());
  return finish_with_best(CegalTermination::kMaxIter);
}

}  // namespace cegal
