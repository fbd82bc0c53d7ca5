// Command-line experiment runner.  One mode per invocation:
//
//   cegal demos  --config c.json            write expert demonstrations
//   cegal al     --config c.json            plain apprenticeship from demos
//   cegal cegal  --config c.json            counterexample-guided run
//   cegal verify --config c.json            check a rule against the property
//   cegal export --config c.json            explicit-state chain files
//   cegal bench  [--full]                   per-iteration phase timings
//
// Any config field can be overridden with --set path.to.key=value; without
// --config the built-in default map is used.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cegal/config.hpp"
#include "cegal/run.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-constrained apprenticeship learning on grid games"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  bool bench_full = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--set", overrides,
                 "Override a config field, e.g. --set learner.epsilon=5");

  static const char* kModes[] = {"demos", "al", "cegal",
                                 "verify", "export", "bench"};
  for (const char* m : kModes) app.add_subcommand(m)->fallthrough();
  app.get_subcommand("bench")->add_flag(
      "--full", bench_full, "Include the 16x16 grid (slow)");

  CLI11_PARSE(app, argc, argv);
  const std::string mode = app.get_subcommands().front()->get_name();

  try {
    std::string text = config_path.empty() ? "{}" : read_file(config_path);
    for (const std::string& kv : overrides)
      text = cegal::apply_override(text, kv);
    const cegal::ExperimentConfig config = cegal::parse_config(text);
    return cegal::run_mode(mode, config, bench_full, std::cout);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"mode", mode}}.dump()
              << "\n";
    return 1;
  }
}
