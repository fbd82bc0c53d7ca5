#pragma once

#include <string>
#include <vector>

#include "cegal/cex.hpp"
#include "cegal/checker.hpp"
#include "cegal/model.hpp"
#include "cegal/solve.hpp"

namespace cegal {

/// Certificate agreement required of the margin solver on test instances.
inline constexpr double kMarginCertTol = 1e-6;

struct MaxMarginResult {
  std::vector<double> weights;  // unit norm (or zero when the hull touches 0)
  double delta = 0.0;           // achieved minimum margin
  /// Distance from the expert point to the convex hull of the candidate
  /// points; the optimum of the max-margin program equals this distance.
  double hull_distance = 0.0;
};

/// Maximum-margin weight vector:
///   max_{||w|| <= 1} min_i w . (mu_E - mus[i]).
/// Solved by projected subgradient ascent on the unit ball (step 1/sqrt(t),
/// 2000 iterations, restarted from the best single-difference direction)
/// followed by a pairwise Frank-Wolfe computation of the minimum-norm point
/// of the difference hull, whose norm certifies the optimum.
MaxMarginResult max_margin_weights(const std::vector<double>& mu_E,
                                   const std::vector<std::vector<double>>& mus);

/// Safety-aware weight update: with safe candidate expectations S, attractor
/// candidates also ranging over S, and counterexample expectations C,
///   max_{||w|| <= 1} min_{p in S, q in S, c in C}
///     w . (k (mu_E - p) + (1 - k) (q - c)).
/// The minimum separates over the triple, so the solver works on the
/// implicit product set.  With C empty (or k = 1) this reduces to
/// max_margin_weights.
MaxMarginResult combined_weight_update(
    const std::vector<double>& mu_E,
    const std::vector<std::vector<double>>& safe_mus,
    const std::vector<std::vector<double>>& cex_mus, double k);

struct ALParams {
  double epsilon = 10.0;
  int max_iter = 200;
};

struct ALIteration {
  int iter = 0;
  double delta = 0.0;
  double hull_distance = 0.0;
  double distance = 0.0;  // ||mu_E - mu|| of the candidate added this round
};

struct ALResult {
  DecisionRule rule;           // candidate closest to mu_E
  std::vector<double> mu;
  std::vector<double> weights; // final weight vector
  std::vector<ALIteration> log;
  bool converged = false;
  int iterations = 0;
};

/// Candidate pool for the plain apprenticeship loop.
struct ALState {
  std::vector<DecisionRule> rules;
  std::vector<std::vector<double>> mus;
};

struct ALStepResult {
  std::vector<double> weights;
  double delta = 0.0;
  double hull_distance = 0.0;
  bool terminated = false;  // delta < epsilon; rule/mu not produced
  DecisionRule rule;
  std::vector<double> mu;
};

/// One iteration of plain apprenticeship learning: weights from the current
/// candidate pool, termination check against epsilon, and otherwise the
/// greedy rule for the learned reward with its exact feature expectation.
ALStepResult al_step(const MarkovGame& game, const FeatureMap& features,
                     const std::vector<double>& mu_E, const ALState& state,
                     double epsilon);

/// Plain apprenticeship learning from a uniform initial candidate.
ALResult al_run(const MarkovGame& game, const FeatureMap& features,
                const std::vector<double>& mu_E, const ALParams& params);

struct CegalParams {
  double epsilon = 10.0;  // acceptable ||mu_E - mu|| for early exit
  double sigma = 1e-5;    // bracket width terminating the k search
  double alpha = 0.5;     // contraction of k toward inf on refutation
  int max_iter = 200;
  int max_evidences = kDefaultMaxEvidences;
};

enum class CegalTermination {
  kInitClose,      // the initial safe rule already matches mu_E
  kEpsilonClose,   // a safe candidate matched mu_E within epsilon
  kBracketClosed,  // |k - inf| <= sigma; best safe candidate returned
  kMaxIter,        // iteration cap; best safe candidate returned
};

const char* to_string(CegalTermination t);

struct CegalIteration {
  int iter = 0;
  bool satisfied = false;
  double probability = 0.0;    // checked probability of the candidate
  double distance = 0.0;       // ||mu_E - mu|| of the candidate
  double k = 0.0, inf = 0.0;   // bracket after this iteration's update
  double delta = 0.0;          // margin of the weight solve for the next rule
  double hull_distance = 0.0;
  int cex_evidences = 0;       // evidences added this iteration (0 if safe)
};

struct CegalResult {
  DecisionRule rule;
  std::vector<double> mu;
  /// Weights that generated the returned rule; empty when the returned rule
  /// is the initial one (no weight ever produced it).
  std::vector<double> weights;
  CegalTermination termination = CegalTermination::kMaxIter;
  Verdict final_verdict;       // re-verification of the returned rule
  std::vector<CegalIteration> log;
  int safe_rules = 0;
  int counterexamples = 0;
};

/// Counterexample-guided safe apprenticeship learning.  The initial rule
/// must verify against the property (otherwise std::invalid_argument).  The
/// returned rule always verifies: every return path picks it from the
/// verified-safe candidate set.
CegalResult cegal_run(const MarkovGame& game, const FeatureMap& features,
                      const std::vector<double>& mu_E,
                      const StateFormulaPtr& property,
                      const DecisionRule& initial_safe_rule,
                      const CegalParams& params);

/// Greedy rule for a pessimistic reward: -1 on "unsafe" joint states, +1 on
/// "goal" joint states, 0 elsewhere.  The stock way to obtain an initial
/// safe rule: it heads for the goal only along routes that avoid the unsafe
/// region, and when no such route exists it degenerates to staying put.
/// Not verified here; cegal_run rejects it if it turns out unsafe.
DecisionRule pessimistic_safe_rule(const MarkovGame& game);

double vector_distance(const std::vector<double>& a,
                       const std::vector<double>& b);

}  // namespace cegal
