#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fedcluster {

struct ExperimentSpec {
  std::string name;
  std::string description;
  std::vector<std::string> default_algos;
};

const std::vector<ExperimentSpec>& experiment_registry();
const ExperimentSpec* find_experiment(const std::string& name);

struct RunRequest {
  std::string experiment;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> algos;  // empty = experiment defaults
  std::map<std::string, std::string> options;
  std::string out_dir = "out";
};

/// key = value lines, '#' comments; throws std::runtime_error on bad syntax.
std::map<std::string, std::string> parse_config_file(const std::string& path);

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDivergence = 3;

/// Runs every (algorithm, seed) job of the experiment, fanning seeds out over
/// a worker pool capped by FEDCLUSTER_THREADS. Writes one metrics CSV per job
/// (columns experiment,algo,seed,round,client,metric,value) and one summary
/// JSON with the built-in pass/fail checks. Partial outputs are kept on
/// divergence.
int run_experiment(const RunRequest& request, std::string* error);

}  // namespace fedcluster
