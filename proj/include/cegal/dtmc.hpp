#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cegal/model.hpp"

namespace cegal {

/// Discrete-time Markov chain over integer states with labelled states.
struct Dtmc {
  int n_states = 0;
  int initial_state = 0;
  std::vector<SparseRow> rows;
  std::map<std::string, std::set<int>> labels;

  const SparseRow& row(int s) const { return rows[s]; }
  /// Throws std::invalid_argument on non-stochastic rows or bad labels.
  void validate() const;
};

/// Mixing probabilities below this threshold are dropped from induced rows
/// (the row is renormalized afterwards).
inline constexpr double kInduceDropTol = 1e-15;

/// Induces the DTMC of a decision rule played in a game:
/// P(s, s') = sum_a rule(a|s) P(s'|s, a).  Labels and the initial state are
/// inherited from the game.
Dtmc induce_dtmc(const MarkovGame& game, const DecisionRule& rule);

/// Returns a copy where every state in `states` has its row replaced by a
/// self-loop of probability 1.  Idempotent.
Dtmc make_absorbing(const Dtmc& dtmc, const std::set<int>& states);

/// Explicit-state text export.  Transition lines are "src dst prob" sorted
/// by (src, dst) under a "n m" header; probabilities are printed with 17
/// significant digits so parsing them back is exact.
void export_transitions(const Dtmc& dtmc, std::ostream& out);

/// Labels file: a header mapping label indices to names (indices assigned
/// by sorted name), then one "state: idx idx ..." line per labelled state.
void export_labels(const Dtmc& dtmc, std::ostream& out);

/// Parses the output of export_transitions / export_labels back into a
/// Dtmc.  The initial state is taken from the "init" label when present,
/// otherwise 0.  Throws std::runtime_error on malformed input.
Dtmc parse_explicit(std::istream& transitions, std::istream& labels);

std::string transitions_to_string(const Dtmc& dtmc);
std::string labels_to_string(const Dtmc& dtmc);
Dtmc parse_explicit_strings(const std::string& transitions,
                            const std::string& labels);

}  // namespace cegal
