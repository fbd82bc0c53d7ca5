#include "cegal/run.hpp"

#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cegal/cex.hpp"
#include "cegal/checker.hpp"
#include "cegal/dtmc.hpp"
#include "cegal/solve.hpp"

namespace cegal {

namespace {

using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json al_iteration_record(const ALIteration& it) {
  return json{{"delta", it.delta},
              {"distance", it.distance},
              {"hull_distance", it.hull_distance},
              {"iter", it.iter}};
}

json cegal_iteration_record(const CegalIteration& it) {
  return json{{"cex_evidences", it.cex_evidences},
              {"delta", it.delta},
              {"distance", it.distance},
              {"hull_distance", it.hull_distance},
              {"inf", it.inf},
              {"iter", it.iter},
              {"k", it.k},
              {"probability", it.probability},
              {"satisfied", it.satisfied}};
}

DecisionRule select_rule(const Workbench& wb) {
  const std::string& which = wb.config.rule_file;
  if (which == "expert") return wb.expert;
  if (which == "safe") return pessimistic_safe_rule(wb.game);
  return rule_from_json(read_text_file(which));
}

void write_reward_grids(const std::filesystem::path& dir,
                        const std::string& prefix, const Workbench& wb,
                        const std::vector<double>& weights) {
  if (weights.empty()) return;
  const std::vector<double> reward = reward_from_weights(weights, wb.features);
  for (int agent = 0; agent < wb.spec.n_agents; ++agent)
    write_text_file(dir / (prefix + "_reward_agent" +
                           std::to_string(agent) + ".csv"),
                    reward_grid_csv(wb.spec, reward, agent));
}

}  // namespace

Workbench make_workbench(const ExperimentConfig& config) {
  Workbench wb;
  wb.config = config;
  wb.spec = to_spec(config.grid);
  wb.game = build_grid_world(wb.spec, config.learner.discount);
  wb.features = FeatureMap::one_hot(wb.game.n_states);
  wb.ground_truth = joint_ground_truth_reward(wb.spec);
  wb.property = parse_formula(config.property);
  wb.expert = value_iteration(wb.game, wb.ground_truth).rule;
  return wb;
}

DemoSet make_demos(const Workbench& wb) {
  return generate_demos(wb.game, wb.expert, wb.config.demos.count,
                        demo_horizon(wb.config), wb.config.demos.seed);
}

std::vector<double> demo_mu(const Workbench& wb, const DemoSet& demos) {
  return estimate_mu(demos, wb.features, wb.config.learner.discount);
}

double expected_return(const MarkovGame& game, const DecisionRule& rule,
                       const std::vector<double>& reward) {
  if (static_cast<int>(reward.size()) != game.n_states)
    throw std::invalid_argument("expected_return: reward size mismatch");
  const Dtmc dtmc = induce_dtmc(game, rule);
  std::vector<double> v(reward), next(dtmc.n_states);
  for (long sweep = 0; sweep < kFeatureSweepCap; ++sweep) {
    double change = 0.0;
    for (int s = 0; s < dtmc.n_states; ++s) {
      double acc = 0.0;
      for (const auto& [t, p] : dtmc.rows[s]) acc += p * v[t];
      next[s] = reward[s] + game.discount * acc;
      change = std::max(change, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (change < kFeatureSweepTol) return v[dtmc.initial_state];
  }
  throw std::runtime_error("expected_return: evaluation did not converge");
}

std::vector<double> per_agent_unsafe(const MarkovGame& game,
                                     const DecisionRule& rule, long hops) {
  const Dtmc dtmc = induce_dtmc(game, rule);
  std::vector<double> out(game.n_agents, 0.0);
  for (int i = 0; i < game.n_agents; ++i) {
    const StateFormulaPtr target = f_label("unsafe" + std::to_string(i));
    const PathFormulaPtr path =
        hops == LONG_MAX ? p_until(f_true(), target)
                         : p_bounded_until(f_true(), target, hops);
    out[i] = path_probability(dtmc, path, dtmc.initial_state);
  }
  return out;
}

long property_hops(const Workbench& wb) {
  if (wb.property->kind != StateFormula::Kind::kProb || !wb.property->path)
    throw UnsupportedFormula("property has no top-level path operator");
  const PathFormula& path = *wb.property->path;
  switch (path.kind) {
    case PathFormula::Kind::kNext: return 1;
    case PathFormula::Kind::kBoundedUntil: return path.hops;
    case PathFormula::Kind::kUntil: return LONG_MAX;
  }
  return LONG_MAX;
}

PipelineAL run_al_pipeline(const Workbench& wb,
                           const std::vector<double>& mu_E) {
  PipelineAL out;
  ALParams params;
  params.epsilon = wb.config.learner.epsilon;
  params.max_iter = wb.config.learner.max_iter;
  out.result = al_run(wb.game, wb.features, mu_E, params);
  out.joint = verify(wb.game, out.result.rule, wb.property);
  out.per_agent = per_agent_unsafe(wb.game, out.result.rule,
                                   property_hops(wb));
  return out;
}

PipelineCegal run_cegal_pipeline(const Workbench& wb,
                                 const std::vector<double>& mu_E) {
  PipelineCegal out;
  out.initial_rule = pessimistic_safe_rule(wb.game);
  out.result = cegal_run(wb.game, wb.features, mu_E, wb.property,
                         out.initial_rule, to_cegal_params(wb.config.learner));
  out.per_agent = per_agent_unsafe(wb.game, out.result.rule,
                                   property_hops(wb));
  out.initial_return =
      expected_return(wb.game, out.initial_rule, wb.ground_truth);
  out.final_return = expected_return(wb.game, out.result.rule,
                                     wb.ground_truth);
  return out;
}

std::string rule_to_json(const DecisionRule& rule) {
  int n_actions = 0;
  json entries = json::array();
  for (int s = 0; s < rule.n_states(); ++s) {
    for (const auto& [a, p] : rule.rows[s]) {
      entries.push_back(json::array({s, a, p}));
      n_actions = std::max(n_actions, a + 1);
    }
  }
  const json doc{{"entries", std::move(entries)},
                 {"n_actions", n_actions},
                 {"n_states", rule.n_states()}};
  return doc.dump() + "\n";
}

DecisionRule rule_from_json(const std::string& text) {
  const json doc = json::parse(text);
  const int n_states = doc.at("n_states").get<int>();
  const int n_actions = doc.at("n_actions").get<int>();
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("rule: empty state or action space");
  DecisionRule rule;
  rule.rows.assign(n_states, {});
  for (const json& e : doc.at("entries")) {
    const int s = e.at(0).get<int>();
    const int a = e.at(1).get<int>();
    const double p = e.at(2).get<double>();
    if (s < 0 || s >= n_states || a < 0 || a >= n_actions)
      throw std::invalid_argument("rule: entry out of range");
    rule.rows[s].emplace_back(a, p);
  }
  rule.validate(n_states, n_actions);
  return rule;
}

std::string reward_grid_csv(const GridWorldSpec& spec,
                            const std::vector<double>& joint_reward,
                            int agent) {
  if (agent < 0 || agent >= spec.n_agents)
    throw std::invalid_argument("reward grid: agent out of range");
  const int cells = spec.side * spec.side;
  std::vector<double> sum(cells, 0.0);
  std::vector<long> count(cells, 0);
  JointIndexer indexer{spec.n_agents, cells};
  for (int s = 0; s < static_cast<int>(joint_reward.size()); ++s) {
    const int c = indexer.digit(s, agent);
    sum[c] += joint_reward[s];
    ++count[c];
  }
  std::string out;
  for (int row = 0; row < spec.side; ++row) {
    for (int col = 0; col < spec.side; ++col) {
      const int c = spec.cell(row, col);
      if (col) out += ',';
      out += fmt17(count[c] ? sum[c] / count[c] : 0.0);
    }
    out += '\n';
  }
  return out;
}

std::vector<BenchRow> run_bench(const ExperimentConfig& base,
                                const std::vector<int>& sides, int repeats) {
  if (repeats < 1) throw std::invalid_argument("bench: repeats < 1");
  std::vector<BenchRow> rows;
  for (int side : sides) {
    ExperimentConfig config = base;
    config.grid = default_grid(side, base.grid.n_agents);
    const Workbench wb = make_workbench(config);

    BenchRow row;
    row.side = side;
    row.joint_states = wb.game.n_states;

    for (int r = 0; r < repeats; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      ValueIterationResult vi = value_iteration(wb.game, wb.ground_truth);
      row.rule_s += seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      feature_expectations_exact(wb.game, vi.rule, wb.features);
      row.feature_s += seconds_since(t0);

      const Dtmc dtmc = induce_dtmc(wb.game, vi.rule);
      t0 = std::chrono::steady_clock::now();
      verify_dtmc(dtmc, wb.property);
      row.checking_s += seconds_since(t0);

      const UntilQuery q = until_query(dtmc, wb.property);
      t0 = std::chrono::steady_clock::now();
      smallest_counterexample(dtmc, q.phi1, q.phi2, q.hops, q.bound,
                              base.learner.max_evidences);
      row.cex_s += seconds_since(t0);
    }
    row.rule_s /= repeats;
    row.feature_s /= repeats;
    row.checking_s /= repeats;
    row.cex_s /= repeats;
    rows.push_back(row);
  }
  return rows;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::string out =
      "grid      joint_states  rule_s      feature_s   checking_s  cex_s\n";
  char line[160];
  for (const BenchRow& r : rows) {
    char grid[16];
    std::snprintf(grid, sizeof grid, "%dx%d", r.side, r.side);
    std::snprintf(line, sizeof line, "%-8s  %-12d  %-10.4g  %-10.4g  %-10.4g  %-10.4g\n",
                  grid, r.joint_states, r.rule_s, r.feature_s, r.checking_s,
                  r.cex_s);
    out += line;
  }
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "side,joint_states,rule_s,feature_s,checking_s,cex_s\n";
  for (const BenchRow& r : rows) {
    out += std::to_string(r.side) + ',' + std::to_string(r.joint_states) +
           ',' + fmt17(r.rule_s) + ',' + fmt17(r.feature_s) + ',' +
           fmt17(r.checking_s) + ',' + fmt17(r.cex_s) + '\n';
  }
  return out;
}

int run_mode(const std::string& mode, const ExperimentConfig& config,
             bool bench_full, std::ostream& out) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);

  if (mode == "bench") {
    std::vector<int> sides{3, 8};
    if (bench_full) sides.push_back(16);
    const std::vector<BenchRow> rows = run_bench(config, sides);
    write_text_file(dir / "bench.csv", bench_csv(rows));
    out << bench_table(rows);
    return 0;
  }

  const Workbench wb = make_workbench(config);

  if (mode == "demos") {
    const DemoSet demos = make_demos(wb);
    write_text_file(dir / "demos.jsonl", demos_to_string(demos));
    out << json{{"count", static_cast<int>(demos.trajectories.size())},
                {"file", (dir / "demos.jsonl").string()},
                {"horizon", demos.horizon},
                {"mode", "demos"}}
               .dump()
        << "\n";
    return 0;
  }

  if (mode == "al" || mode == "cegal") {
    const DemoSet demos =
        demos_from_string(read_text_file(dir / "demos.jsonl"));
    const std::vector<double> mu_E = demo_mu(wb, demos);

    if (mode == "al") {
      const PipelineAL al = run_al_pipeline(wb, mu_E);
      std::string log;
      for (const ALIteration& it : al.result.log)
        log += al_iteration_record(it).dump() + "\n";
      write_text_file(dir / "al_log.jsonl", log);
      write_text_file(dir / "al_rule.json", rule_to_json(al.result.rule));
      write_reward_grids(dir, "al", wb, al.result.weights);
      out << json{{"converged", al.result.converged},
                  {"iterations", al.result.iterations},
                  {"joint_unsafe", al.joint.probability},
                  {"mode", "al"},
                  {"per_agent_unsafe", al.per_agent},
                  {"satisfied", al.joint.satisfied}}
                 .dump()
          << "\n";
      return 0;
    }

    const PipelineCegal cg = run_cegal_pipeline(wb, mu_E);
    std::string log;
    for (const CegalIteration& it : cg.result.log)
      log += cegal_iteration_record(it).dump() + "\n";
    write_text_file(dir / "cegal_log.jsonl", log);
    write_text_file(dir / "cegal_rule.json", rule_to_json(cg.result.rule));
    write_reward_grids(dir, "cegal", wb, cg.result.weights);
    out << json{{"final_return", cg.final_return},
                {"initial_return", cg.initial_return},
                {"joint_unsafe", cg.result.final_verdict.probability},
                {"mode", "cegal"},
                {"per_agent_unsafe", cg.per_agent},
                {"safe_rules", cg.result.safe_rules},
                {"satisfied", cg.result.final_verdict.satisfied},
                {"termination", to_string(cg.result.termination)}}
               .dump()
        << "\n";
    return 0;
  }

  if (mode == "verify") {
    const DecisionRule rule = select_rule(wb);
    const Verdict verdict = verify(wb.game, rule, wb.property);
    const std::vector<double> marginals =
        per_agent_unsafe(wb.game, rule, property_hops(wb));
    out << (verdict.satisfied ? "Satisfy" : "Unsatisfy") << " "
        << fmt17(verdict.probability);
    for (std::size_t i = 0; i < marginals.size(); ++i)
      out << " unsafe" << i << "=" << fmt17(marginals[i]);
    out << "\n";
    return 0;
  }

  if (mode == "export") {
    const DecisionRule rule = select_rule(wb);
    const Dtmc dtmc = induce_dtmc(wb.game, rule);
    write_text_file(dir / "chain.tra", transitions_to_string(dtmc));
    write_text_file(dir / "chain.lab", labels_to_string(dtmc));
    out << json{{"labels", (dir / "chain.lab").string()},
                {"mode", "export"},
                {"states", dtmc.n_states},
                {"transitions", (dir / "chain.tra").string()}}
               .dump()
        << "\n";
    return 0;
  }

  throw std::invalid_argument("unknown mode: " + mode);
}

}  // namespace cegal
