#include "cegal/checker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <utility>

namespace cegal {

StateFormulaPtr f_true() {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::kTrue;
  return f;
}

StateFormulaPtr f_label(std::string name) {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::kLabel;
  f->label = std::move(name);
  return f;
}

StateFormulaPtr f_not(StateFormulaPtr inner) {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::kNot;
  f->lhs = std::move(inner);
  return f;
}

StateFormulaPtr f_and(StateFormulaPtr a, StateFormulaPtr b) {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::kAnd;
  f->lhs = std::move(a);
  f->rhs = std::move(b);
  return f;
}

StateFormulaPtr f_prob(Cmp cmp, double bound, PathFormulaPtr path) {
  if (!(bound >= 0.0 && bound <= 1.0))
    throw std::invalid_argument("probability bound outside [0, 1]");
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::kProb;
  f->cmp = cmp;
  f->bound = bound;
  f->path = std::move(path);
  return f;
}

PathFormulaPtr p_next(StateFormulaPtr inner) {
  auto p = std::make_shared<PathFormula>();
  p->kind = PathFormula::Kind::kNext;
  p->right = std::move(inner);
  return p;
}

PathFormulaPtr p_bounded_until(StateFormulaPtr left, StateFormulaPtr right,
                               long hops) {
  if (hops < 0) throw std::invalid_argument("bounded until: negative bound");
  auto p = std::make_shared<PathFormula>();
  p->kind = PathFormula::Kind::kBoundedUntil;
  p->left = std::move(left);
  p->right = std::move(right);
  p->hops = hops;
  return p;
}

PathFormulaPtr p_until(StateFormulaPtr left, StateFormulaPtr right) {
  auto p = std::make_shared<PathFormula>();
  p->kind = PathFormula::Kind::kUntil;
  p->left = std::move(left);
  p->right = std::move(right);
  return p;
}

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  StateFormulaPtr parse() {
    auto f = state_formula();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("formula parse error at offset " +
                                std::to_string(pos_) + ": " + why);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool eat_word(const char* w) {
    skip_ws();
    const std::size_t n = std::strlen(w);
    if (s_.compare(pos_, n, w) == 0) {
      const std::size_t end = pos_ + n;
      if (end < s_.size() &&
          std::isalnum(static_cast<unsigned char>(s_[end])))
        return false;
      pos_ = end;
      return true;
    }
    return false;
  }

  double number() {
    skip_ws();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("expected number");
    }
    pos_ += used;
    return v;
  }

  long integer() {
    skip_ws();
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("expected integer");
    }
    pos_ += used;
    return v;
  }

  Cmp comparator() {
    skip_ws();
    if (s_.compare(pos_, 2, "<=") == 0) { pos_ += 2; return Cmp::kLe; }
    if (s_.compare(pos_, 2, ">=") == 0) { pos_ += 2; return Cmp::kGe; }
    if (s_.compare(pos_, 1, "<") == 0) { pos_ += 1; return Cmp::kLt; }
    if (s_.compare(pos_, 1, ">") == 0) { pos_ += 1; return Cmp::kGt; }
    fail("expected comparator");
  }

  StateFormulaPtr state_formula() {
    auto lhs = state_atom();
    skip_ws();
    while (eat('&')) {
      auto rhs = state_atom();
      lhs = f_and(std::move(lhs), std::move(rhs));
      skip_ws();
    }
    return lhs;
  }

  StateFormulaPtr state_atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (eat('(')) {
      auto f = state_formula();
      if (!eat(')')) fail("expected ')'");
      return f;
    }
    if (eat('!')) return f_not(state_atom());
    if (eat_word("true")) return f_true();
    if (s_[pos_] == '"') {
      ++pos_;
      const auto end = s_.find('"', pos_);
      if (end == std::string::npos) fail("unterminated label");
      std::string name = s_.substr(pos_, end - pos_);
      if (name.empty()) fail("empty label");
      pos_ = end + 1;
      return f_label(std::move(name));
    }
    if (s_[pos_] == 'P') {
      ++pos_;
      const Cmp cmp = comparator();
      const double bound = number();
      if (!eat('[')) fail("expected '['");
      auto path = path_formula();
      if (!eat(']')) fail("expected ']'");
      return f_prob(cmp, bound, std::move(path));
    }
    fail("expected state formula");
  }

  PathFormulaPtr path_formula() {
    skip_ws();
    if (eat_word("X")) return p_next(state_formula());
    auto left = state_formula();
    skip_ws();
    if (!eat('U')) fail("expected 'U'");
    if (s_.compare(pos_, 2, "<=") == 0) {
      pos_ += 2;
      const long hops = integer();
      if (hops < 0) fail("negative hop bound");
      auto right = state_formula();
      return p_bounded_until(std::move(left), std::move(right), hops);
    }
    auto right = state_formula();
    return p_until(std::move(left), std::move(right));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

const char* cmp_text(Cmp c) {
  switch (c) {
    case Cmp::kLe: return "<=";
    case Cmp::kLt: return "<";
    case Cmp::kGe: return ">=";
    case Cmp::kGt: return ">";
  }
  return "<=";
}

void format_state(const StateFormulaPtr& f, std::ostream& out);

void format_path(const PathFormulaPtr& p, std::ostream& out) {
  switch (p->kind) {
    case PathFormula::Kind::kNext:
      out << "X ";
      format_state(p->right, out);
      return;
    case PathFormula::Kind::kBoundedUntil:
      format_state(p->left, out);
      out << " U<=" << p->hops << ' ';
      format_state(p->right, out);
      return;
    case PathFormula::Kind::kUntil:
      format_state(p->left, out);
      out << " U ";
      format_state(p->right, out);
      return;
  }
}

void format_state(const StateFormulaPtr& f, std::ostream& out) {
  switch (f->kind) {
    case StateFormula::Kind::kTrue:
      out << "true";
      return;
    case StateFormula::Kind::kLabel:
      out << '"' << f->label << '"';
      return;
    case StateFormula::Kind::kNot:
      out << "!(";
      format_state(f->lhs, out);
      out << ')';
      return;
    case StateFormula::Kind::kAnd:
      out << '(';
      format_state(f->lhs, out);
      out << " & ";
      format_state(f->rhs, out);
      out << ')';
      return;
    case StateFormula::Kind::kProb: {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.17g", f->bound);
      out << 'P' << cmp_text(f->cmp) << buf << " [ ";
      format_path(f->path, out);
      out << " ]";
      return;
    }
  }
}

bool compare(Cmp cmp, double value, double bound) {
  switch (cmp) {
    case Cmp::kLe: return value <= bound;
    case Cmp::kLt: return value < bound;
    case Cmp::kGe: return value >= bound;
    case Cmp::kGt: return value > bound;
  }
  return false;
}

}  // namespace

StateFormulaPtr parse_formula(const std::string& text) {
  return Parser(text).parse();
}

std::string format_formula(const StateFormulaPtr& f) {
  std::ostringstream os;
  format_state(f, os);
  return os.str();
}

namespace {

/// One synchronous sweep x' = P x restricted to "middle" states; states in
/// `one` hold value 1, states outside `one | middle` hold 0.
void sweep(const Dtmc& dtmc, const StateMask& one, const StateMask& middle,
           const std::vector<double>& x, std::vector<double>& out) {
  for (int s = 0; s < dtmc.n_states; ++s) {
    if (one[s]) {
      out[s] = 1.0;
    } else if (!middle[s]) {
      out[s] = 0.0;
    } else {
      double acc = 0.0;
      for (const auto& [t, p] : dtmc.rows[s]) acc += p * x[t];
      out[s] = acc;
    }
  }
}

std::vector<double> until_probabilities(const Dtmc& dtmc,
                                        const StateMask& phi1,
                                        const StateMask& phi2, long hops,
                                        bool bounded) {
  const int n = dtmc.n_states;
  StateMask middle(n, 0);
  for (int s = 0; s < n; ++s) middle[s] = phi1[s] && !phi2[s];
  std::vector<double> x(n, 0.0), next(n, 0.0);
  for (int s = 0; s < n; ++s) x[s] = phi2[s] ? 1.0 : 0.0;
  const long cap = bounded ? hops : kUntilSweepCap;
  for (long k = 0; k < cap; ++k) {
    sweep(dtmc, phi2, middle, x, next);
    if (!bounded) {
      double change = 0.0;
      for (int s = 0; s < n; ++s)
        change = std::max(change, std::abs(next[s] - x[s]));
      if (change < kUntilTol) return next;
    } else if (std::memcmp(next.data(), x.data(), n * sizeof(double)) == 0) {
      // Exact fixpoint: remaining bounded sweeps cannot change anything.
      return next;
    }
    x.swap(next);
  }
  if (!bounded)
    throw FixpointError("until: fixpoint sweep cap exceeded", x);
  return x;
}

}  // namespace

StateMask eval_state_set(const Dtmc& dtmc, const StateFormulaPtr& formula) {
  const int n = dtmc.n_states;
  switch (formula->kind) {
    case StateFormula::Kind::kTrue:
      return StateMask(n, 1);
    case StateFormula::Kind::kLabel: {
      const auto it = dtmc.labels.find(formula->label);
      if (it == dtmc.labels.end())
        throw UnsupportedFormula("unknown label: " + formula->label);
      StateMask mask(n, 0);
      for (int s : it->second) mask[s] = 1;
      return mask;
    }
    case StateFormula::Kind::kNot: {
      StateMask mask = eval_state_set(dtmc, formula->lhs);
      for (int s = 0; s < n; ++s) mask[s] = !mask[s];
      return mask;
    }
    case StateFormula::Kind::kAnd: {
      StateMask a = eval_state_set(dtmc, formula->lhs);
      const StateMask b = eval_state_set(dtmc, formula->rhs);
      for (int s = 0; s < n; ++s) a[s] = a[s] && b[s];
      return a;
    }
    case StateFormula::Kind::kProb: {
      const std::vector<double> probs = path_probabilities(dtmc, formula->path);
      StateMask mask(n, 0);
      for (int s = 0; s < n; ++s)
        mask[s] = compare(formula->cmp, probs[s], formula->bound);
      return mask;
    }
  }
  throw std::logic_error("eval_state_set: bad formula kind");
}

std::vector<double> path_probabilities(const Dtmc& dtmc,
                                       const PathFormulaPtr& path) {
  switch (path->kind) {
    case PathFormula::Kind::kNext: {
      const StateMask target = eval_state_set(dtmc, path->right);
      std::vector<double> probs(dtmc.n_states, 0.0);
      for (int s = 0; s < dtmc.n_states; ++s) {
        double acc = 0.0;
        for (const auto& [t, p] : dtmc.rows[s])
          if (target[t]) acc += p;
        probs[s] = acc;
      }
      return probs;
    }
    case PathFormula::Kind::kBoundedUntil: {
      const StateMask phi1 = eval_state_set(dtmc, path->left);
      const StateMask phi2 = eval_state_set(dtmc, path->right);
      return until_probabilities(dtmc, phi1, phi2, path->hops, true);
    }
    case PathFormula::Kind::kUntil: {
      const StateMask phi1 = eval_state_set(dtmc, path->left);
      const StateMask phi2 = eval_state_set(dtmc, path->right);
      return until_probabilities(dtmc, phi1, phi2, 0, false);
    }
  }
  throw std::logic_error("path_probabilities: bad path kind");
}

double path_probability(const Dtmc& dtmc, const PathFormulaPtr& path,
                        int state) {
  if (state < 0 || state >= dtmc.n_states)
    throw std::invalid_argument("path_probability: state out of range");
  return path_probabilities(dtmc, path)[state];
}

Verdict verify_dtmc(const Dtmc& dtmc, const StateFormulaPtr& formula) {
  if (formula->kind != StateFormula::Kind::kProb)
    throw UnsupportedFormula("verify: top-level formula must be P<=/P<");
  if (formula->cmp != Cmp::kLe && formula->cmp != Cmp::kLt)
    throw UnsupportedFormula(
        "verify: top-level comparator must be an upper bound (<= or <)");
  Verdict v;
  v.probability = path_probability(dtmc, formula->path, dtmc.initial_state);
  v.satisfied = compare(formula->cmp, v.probability, formula->bound);
  return v;
}

Verdict verify(const MarkovGame& game, const DecisionRule& rule,
               const StateFormulaPtr& formula) {
  return verify_dtmc(induce_dtmc(game, rule), formula);
}

}  // namespace cegal
