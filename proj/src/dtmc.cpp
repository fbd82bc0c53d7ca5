#include "cegal/dtmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cegal {

void Dtmc::validate() const {
  if (n_states < 1) throw std::invalid_argument("dtmc: n_states < 1");
  if (initial_state < 0 || initial_state >= n_states)
    throw std::invalid_argument("dtmc: initial state out of range");
  if (static_cast<int>(rows.size()) != n_states)
    throw std::invalid_argument("dtmc: row count != n_states");
  for (const auto& row : rows) {
    double sum = 0.0;
    int prev = -1;
    for (const auto& [idx, p] : row) {
      if (idx < 0 || idx >= n_states)
        throw std::invalid_argument("dtmc: successor out of range");
      if (idx <= prev) throw std::invalid_argument("dtmc: row not sorted");
      if (!(p > 0.0))
        throw std::invalid_argument("dtmc: non-positive probability");
      prev = idx;
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw std::invalid_argument("dtmc: row does not sum to 1");
  }
  for (const auto& [name, states] : labels) {
    if (name.empty()) throw std::invalid_argument("dtmc: empty label name");
    for (int s : states)
      if (s < 0 || s >= n_states)
        throw std::invalid_argument("dtmc: label state out of range");
  }
}

Dtmc induce_dtmc(const MarkovGame& game, const DecisionRule& rule) {
  rule.validate(game.n_states, game.n_actions);
  Dtmc out;
  out.n_states = game.n_states;
  out.initial_state = game.initial_state;
  out.labels = game.labels;
  out.rows.resize(game.n_states);
  std::vector<double> dense(game.n_states, 0.0);
  std::vector<int> touched;
  for (int s = 0; s < game.n_states; ++s) {
    touched.clear();
    for (const auto& [a, pa] : rule.rows[s]) {
      for (const auto& [t, pt] : game.row(s, a)) {
        if (dense[t] == 0.0) touched.push_back(t);
        dense[t] += pa * pt;
      }
    }
    std::sort(touched.begin(), touched.end());
    SparseRow row;
    row.reserve(touched.size());
    double sum = 0.0;
    for (int t : touched) {
      if (dense[t] >= kInduceDropTol) {
        row.emplace_back(t, dense[t]);
        sum += dense[t];
      }
      dense[t] = 0.0;
    }
    if (row.empty())
      throw std::invalid_argument("induce: row lost all mass");
    if (sum != 1.0) {
      for (auto& [t, p] : row) p /= sum;
    }
    out.rows[s] = std::move(row);
  }
  return out;
}

Dtmc make_absorbing(const Dtmc& dtmc, const std::set<int>& states) {
  Dtmc out = dtmc;
  for (int s : states) {
    if (s < 0 || s >= dtmc.n_states)
      throw std::invalid_argument("make_absorbing: state out of range");
    out.rows[s] = {{s, 1.0}};
  }
  return out;
}

namespace {

void print_prob(std::ostream& out, double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  out << buf;
}

}  // namespace

void export_transitions(const Dtmc& dtmc, std::ostream& out) {
  std::size_t m = 0;
  for (const auto& row : dtmc.rows) m += row.size();
  out << dtmc.n_states << ' ' << m << '\n';
  for (int s = 0; s < dtmc.n_states; ++s) {
    for (const auto& [t, p] : dtmc.rows[s]) {
      out << s << ' ' << t << ' ';
      print_prob(out, p);
      out << '\n';
    }
  }
}

void export_labels(const Dtmc& dtmc, std::ostream& out) {
  std::map<std::string, int> index;
  for (const auto& [name, states] : dtmc.labels)
    index.emplace(name, static_cast<int>(index.size()));
  bool first = true;
  for (const auto& [name, idx] : index) {
    if (!first) out << ' ';
    out << idx << "=\"" << name << '"';
    first = false;
  }
  out << '\n';
  std::map<int, std::vector<int>> per_state;
  for (const auto& [name, states] : dtmc.labels)
    for (int s : states) per_state[s].push_back(index[name]);
  for (auto& [s, idxs] : per_state) {
    std::sort(idxs.begin(), idxs.end());
    out << s << ':';
    for (int i : idxs) out << ' ' << i;
    out << '\n';
  }
}

std::string transitions_to_string(const Dtmc& dtmc) {
  std::ostringstream os;
  export_transitions(dtmc, os);
  return os.str();
}

std::string labels_to_string(const Dtmc& dtmc) {
  std::ostringstream os;
  export_labels(dtmc, os);
  return os.str();
}

Dtmc parse_explicit(std::istream& transitions, std::istream& labels) {
  Dtmc out;
  std::size_t m = 0;
  if (!(transitions >> out.n_states >> m))
    throw std::runtime_error("parse: bad transitions header");
  if (out.n_states < 1) throw std::runtime_error("parse: n_states < 1");
  out.rows.resize(out.n_states);
  int prev_src = -1, prev_dst = -1;
  for (std::size_t i = 0; i < m; ++i) {
    int src = 0, dst = 0;
    double p = 0.0;
    if (!(transitions >> src >> dst >> p))
      throw std::runtime_error("parse: truncated transitions");
    if (src < 0 || src >= out.n_states || dst < 0 || dst >= out.n_states)
      throw std::runtime_error("parse: state out of range");
    if (src < prev_src || (src == prev_src && dst <= prev_dst))
      throw std::runtime_error("parse: transitions not sorted by (src, dst)");
    prev_src = src;
    prev_dst = dst;
    out.rows[src].emplace_back(dst, p);
  }

  std::string header;
  if (!std::getline(labels, header))
    throw std::runtime_error("parse: missing labels header");
  std::map<int, std::string> names;
  {
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || tok.size() < eq + 3 ||
          tok[eq + 1] != '"' || tok.back() != '"')
        throw std::runtime_error("parse: bad label header token");
      const int idx = std::stoi(tok.substr(0, eq));
      names[idx] = tok.substr(eq + 2, tok.size() - eq - 3);
    }
  }
  for (const auto& [idx, name] : names) out.labels[name];
  std::string line;
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("parse: bad label line");
    const int s = std::stoi(line.substr(0, colon));
    if (s < 0 || s >= out.n_states)
      throw std::runtime_error("parse: labelled state out of range");
    std::istringstream ls(line.substr(colon + 1));
    int idx = 0;
    while (ls >> idx) {
      const auto it = names.find(idx);
      if (it == names.end())
        throw std::runtime_error("parse: unknown label index");
      out.labels[it->second].insert(s);
    }
  }
  const auto init = out.labels.find("init");
  if (init != out.labels.end() && !init->second.empty())
    out.initial_state = *init->second.begin();
  out.validate();
  return out;
}

Dtmc parse_explicit_strings(const std::string& transitions,
                            const std::string& labels) {
  std::istringstream ts(transitions), ls(labels);
  return parse_explicit(ts, ls);
}

}  // namespace cegal
