#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "difflab/config.hpp"

namespace difflab {

// Collects the files an experiment writes into its output directory.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path file(const std::string& name);
  const std::filesystem::path& path() const { return dir_; }
  const std::vector<std::string>& artifacts() const { return artifacts_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> artifacts_;
};

struct Experiment {
  std::string name;
  std::string section;
  std::string description;
  std::vector<ParamSpec> params;  // "seed" is always accepted as well
  std::function<void(const Params&, RunDir&)> run;

  // seed followed by the declared parameters.
  std::vector<ParamSpec> all_params() const;
};

const std::vector<Experiment>& experiment_registry();
const Experiment& find_experiment(const std::string& name);

struct RunReport {
  std::filesystem::path dir;
  std::vector<std::string> artifacts;
};

// Resolves config against the experiment's parameters, runs it into
// out_root / name and writes manifest.txt there. An "experiment" key, as
// found in manifests, must name the same experiment.
RunReport run_experiment(const std::string& name, const Config& config,
                         const std::filesystem::path& out_root);

// experiment = <name>, then every resolved key = value; loading it as a
// config reproduces the run.
void write_manifest(const std::filesystem::path& path, const Experiment& exp,
                    const Params& params, const std::vector<std::string>& artifacts);

}  // namespace difflab
