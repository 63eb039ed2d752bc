#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "dynvoi/cli.hpp"

namespace {

struct SubcommandArgs {
  std::string config_path;
  std::string out;
  std::string format;
  std::vector<std::string> overrides;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kalman demand learning and value-of-information laboratory"};
  app.set_version_flag("--version", std::string(dynvoi::kToolVersion));
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"filter", "covariance and gain schedule of the demand filter"},
      {"steady", "long-run Riccati covariance and gain"},
      {"voi-sweep", "steady-state value of information over a noise grid"},
      {"region", "growth range with a VoI maximum at zero noise"},
      {"simulate", "Monte Carlo run of the myopic learning monopolist"},
      {"bellman", "value iteration for non-myopic pricing"},
      {"euler-limit", "large-noise limit of the Euler information term"},
  };
  std::vector<SubcommandArgs> args(commands.size());
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, commands[i].second);
    sub->add_option("--config,-c", args[i].config_path, "flat key = value config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--out,-o", args[i].out, "output path (default: stdout)");
    sub->add_option("--format", args[i].format, "csv or json");
    sub->add_option("overrides", args[i].overrides, "key=value overrides");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dynvoi::kExitConfig;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!app.got_subcommand(commands[i].first)) continue;
    const auto& a = args[i];
    try {
      std::vector<std::string> overrides = a.overrides;
      if (!a.out.empty()) overrides.push_back("out=" + a.out);
      if (!a.format.empty()) overrides.push_back("format=" + a.format);
      const std::string text = a.config_path.empty() ? "" : dynvoi::read_file(a.config_path);
      const auto cfg = dynvoi::make_run_config(commands[i].first, text, overrides);
      return dynvoi::run(cfg, std::cout, std::cerr);
    } catch (const dynvoi::Error& e) {
      std::cerr << e.kind() << ": " << e.what() << '\n';
      return dynvoi::kExitConfig;
    }
  }
  return dynvoi::kExitConfig;
}
