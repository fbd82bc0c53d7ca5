#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cegal/checker.hpp"
#include "cegal/dtmc.hpp"
#include "cegal/model.hpp"

namespace cegal {

/// Digraph view of a DTMC with edge weights w(v, v') = log(1 / P(v, v')),
/// so shortest walks correspond to most probable paths.
struct WeightedDigraph {
  int n_states = 0;
  std::vector<std::vector<std::pair<int, double>>> edges;

  static WeightedDigraph from_dtmc(const Dtmc& dtmc);
  /// Sum of edge weights along a path given as a state sequence.
  double path_weight(const std::vector<int>& path) const;
};

/// A minimally satisfying path for phi1 U<=h phi2: the final state is the
/// only one satisfying phi2 and all earlier states satisfy phi1.
struct Evidence {
  std::vector<int> path;
  double probability = 0.0;
};

/// Finite set of evidences whose combined probability refutes an upper
/// probability bound.
struct Counterexample {
  std::vector<Evidence> evidences;
  double total_probability = 0.0;
  double bound = 0.0;
};

enum class CexStatus {
  kFound,             // total probability exceeds the bound
  kNoCounterexample,  // enumeration exhausted without exceeding the bound
  kTruncated,         // evidence or expansion cap hit first; set is partial
};

struct CexResult {
  CexStatus status = CexStatus::kNoCounterexample;
  Counterexample cex;
};

inline constexpr int kDefaultMaxEvidences = 5000;
/// Guard on queue expansions; prevents runaway searches on chains whose
/// probability mass is spread over very many low-probability paths.
inline constexpr long kDefaultMaxExpansions = 2000000;

/// Most probable minimally satisfying path from the initial state, at most
/// `hops` hops.  Ties are broken lexicographically on the state sequence.
/// The probability is computed by a dynamic program over (state, hop);
/// paths longer than n_states - 1 hops never need to be considered because
/// cutting a cycle from an evidence strictly increases its probability.
/// Returns nullopt when no such path exists.
std::optional<Evidence> strongest_evidence(const Dtmc& dtmc,
                                           const StateMask& phi1,
                                           const StateMask& phi2, long hops);

/// Smallest counterexample refuting P<=bound [ phi1 U<=hops phi2 ]:
/// enumerates evidences in nonincreasing probability order (ties
/// lexicographic) and stops as soon as the accumulated probability exceeds
/// the bound, so the returned set has minimal cardinality and maximal
/// probability among sets of that cardinality.  Enumeration depth is capped
/// at min(hops, 4 * n_states).
CexResult smallest_counterexample(const Dtmc& dtmc, const StateMask& phi1,
                                  const StateMask& phi2, long hops,
                                  double bound,
                                  int max_evidences = kDefaultMaxEvidences,
                                  long max_expansions = kDefaultMaxExpansions);

/// Probability-weighted feature expectation of a counterexample:
/// sum_sigma Pr(sigma) / Pr(cex) * sum_t gamma^t f(sigma[t]).
std::vector<double> counterexample_features(const Counterexample& cex,
                                            const FeatureMap& features,
                                            double discount);

/// Extracts (phi1, phi2, hop bound, probability bound) from a property of
/// the form P<=p [ phi1 U<=h phi2 ] or P<=p [ phi1 U phi2 ] evaluated on a
/// chain.  Next-step path formulas have no path-based counterexample here
/// and raise UnsupportedFormula.
struct UntilQuery {
  StateMask phi1, phi2;
  long hops = 0;
  double bound = 0.0;
};

UntilQuery until_query(const Dtmc& dtmc, const StateFormulaPtr& formula);

/// {"evidences": [{"path": [...], "prob": p}, ...], "total": t, "bound": b}
std::string counterexample_to_json(const Counterexample& cex);
Counterexample counterexample_from_json(const std::string& text);

}  // namespace cegal
