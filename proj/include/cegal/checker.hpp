#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cegal/dtmc.hpp"
#include "cegal/model.hpp"

namespace cegal {

/// PCTL fragment: state formulas over atomic labels with negation,
/// conjunction and probability operators; path formulas are next,
/// step-bounded until and unbounded until.
enum class Cmp { kLe, kLt, kGe, kGt };

struct StateFormula;
using StateFormulaPtr = std::shared_ptr<const StateFormula>;

struct PathFormula;
using PathFormulaPtr = std::shared_ptr<const PathFormula>;

struct StateFormula {
  enum class Kind { kTrue, kLabel, kNot, kAnd, kProb };
  Kind kind = Kind::kTrue;
  std::string label;            // kLabel
  StateFormulaPtr lhs, rhs;     // kNot (lhs), kAnd
  Cmp cmp = Cmp::kLe;           // kProb
  double bound = 0.0;           // kProb
  PathFormulaPtr path;          // kProb
};

struct PathFormula {
  enum class Kind { kNext, kBoundedUntil, kUntil };
  Kind kind = Kind::kNext;
  StateFormulaPtr left, right;  // next uses right only
  long hops = 0;                // kBoundedUntil
};

StateFormulaPtr f_true();
StateFormulaPtr f_label(std::string name);
StateFormulaPtr f_not(StateFormulaPtr f);
StateFormulaPtr f_and(StateFormulaPtr a, StateFormulaPtr b);
StateFormulaPtr f_prob(Cmp cmp, double bound, PathFormulaPtr path);
PathFormulaPtr p_next(StateFormulaPtr f);
PathFormulaPtr p_bounded_until(StateFormulaPtr left, StateFormulaPtr right,
                               long hops);
PathFormulaPtr p_until(StateFormulaPtr left, StateFormulaPtr right);

/// Formula text, e.g. `P<=0.25 [ true U<=4096 "unsafe" ]`.
/// Grammar (whitespace insensitive):
///   state := true | "label" | ! state | state & state | ( state )
///          | P(<=|<|>=|>)number [ path ]
///   path  := X state | state U state | state U<=int state
StateFormulaPtr parse_formula(const std::string& text);
std::string format_formula(const StateFormulaPtr& f);

/// mask[s] != 0 iff s satisfies the formula.
using StateMask = std::vector<char>;

/// Unbounded-until fixpoint sweeps stop below this sup-norm change.
inline constexpr double kUntilTol = 1e-12;
inline constexpr long kUntilSweepCap = 1000000;

/// Thrown when the unbounded-until fixpoint fails to converge within the
/// sweep cap; carries the last iterate.
struct FixpointError : std::runtime_error {
  FixpointError(std::string msg, std::vector<double> iterate)
      : std::runtime_error(std::move(msg)), last_iterate(std::move(iterate)) {}
  std::vector<double> last_iterate;
};

/// Thrown on references to labels the model does not define and on verify
/// calls whose top-level formula is unsupported.
struct UnsupportedFormula : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Exact set of states satisfying a state formula.
StateMask eval_state_set(const Dtmc& dtmc, const StateFormulaPtr& formula);

/// Probability of the path formula holding from each state.
std::vector<double> path_probabilities(const Dtmc& dtmc,
                                       const PathFormulaPtr& path);

/// Probability of the path formula from a single state.
double path_probability(const Dtmc& dtmc, const PathFormulaPtr& path,
                        int state);

struct Verdict {
  bool satisfied = false;
  /// Checked probability of the top-level path formula at the initial state.
  double probability = 0.0;
};

/// Checks a probabilistic safety property against the DTMC induced by a
/// rule.  The top-level formula must be a probability operator with a <= or
/// < comparator (an upper bound); anything else is UnsupportedFormula.
Verdict verify(const MarkovGame& game, const DecisionRule& rule,
               const StateFormulaPtr& formula);

/// Same check on an already induced chain.
Verdict verify_dtmc(const Dtmc& dtmc, const StateFormulaPtr& formula);

}  // namespace cegal
