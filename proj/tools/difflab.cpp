#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "difflab/error.hpp"
#include "difflab/experiments.hpp"

namespace {

// Experiment overrides arrive as leftover "--key value" or "--key=value".
difflab::Config parse_overrides(const std::vector<std::string>& extras) {
  difflab::Config c;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    difflab::require(arg.rfind("--", 0) == 0 && arg.size() > 2, "unexpected argument '" + arg + "'");
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      c.set(arg.substr(2, eq - 2), arg.substr(eq + 1));
    } else {
      difflab::require(i + 1 < extras.size(), "missing value for '" + arg + "'");
      c.set(arg.substr(2), extras[++i]);
    }
  }
  return c;
}

void print_list(bool json) {
  const auto& reg = difflab::experiment_registry();
  if (!json) {
    for (const auto& e : reg)
      std::cout << e.name << std::string(16 - std::min<std::size_t>(15, e.name.size()), ' ')
                << "section " << e.section << "  " << e.description << '\n';
    return;
  }
  nlohmann::json out = nlohmann::json::object();
  out["experiments"] = nlohmann::json::array();
  for (const auto& e : reg) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : e.all_params())
      params.push_back({{"key", p.key}, {"default", p.default_value}, {"help", p.help}});
    out["experiments"].push_back({{"name", e.name},
                                  {"section", e.section},
                                  {"description", e.description},
                                  {"params", params}});
  }
  std::cout << out.dump(2) << '\n';
}

void print_params(const std::string& name) {
  const auto& e = difflab::find_experiment(name);
  std::cout << e.name << ": " << e.description << " (section " << e.section << ")\n";
  for (const auto& p : e.all_params())
    std::cout << "  --" << p.key << " (default '" << p.default_value << "')  " << p.help << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on diffusion-model mathematics"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List experiments");
  bool json = false;
  list->add_flag("--json", json, "Print the registry as one JSON object");

  auto* params = app.add_subcommand("params", "Show an experiment's keys and defaults");
  std::string params_name;
  params->add_option("experiment", params_name)->required();

  auto* run = app.add_subcommand("run", "Run an experiment; other --key value pairs override its keys");
  run->allow_extras();
  std::string name, config_path, out = "runs";
  std::string seed;
  run->add_option("experiment", name, "Experiment name (optional with a manifest config)");
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--out", out, "Output root")->envname("DIFFLAB_OUT");
  run->add_option("--config", config_path, "key = value file; flags take precedence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*list) {
      print_list(json);
    } else if (*params) {
      print_params(params_name);
    } else {
      difflab::Config config;
      if (!config_path.empty()) config = difflab::Config::load(config_path);
      config.merge(parse_overrides(run->remaining()));
      if (!seed.empty()) config.set("seed", seed);
      const auto report = difflab::run_experiment(name, config, out);
      for (const auto& a : report.artifacts) std::cout << (report.dir / a).string() << '\n';
      std::cout << (report.dir / "manifest.txt").string() << '\n';
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "difflab: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "difflab: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
