#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedcluster/experiments.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_seed_range(const std::string& range, std::vector<std::uint64_t>* seeds) {
  const auto dots = range.find("..");
  if (dots == std::string::npos) return false;
  try {
    const std::uint64_t a = std::stoull(range.substr(0, dots));
    const std::uint64_t b = std::stoull(range.substr(dots + 2));
    if (b < a) return false;
    for (std::uint64_t s = a; s <= b; ++s) seeds->push_back(s);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

int do_list(bool as_json) {
  if (as_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& spec : fedcluster::experiment_registry()) {
      out.push_back({{"name", spec.name},
                     {"description", spec.description},
                     {"algos", spec.default_algos}});
    }
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& spec : fedcluster::experiment_registry()) {
      std::cout << spec.name << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic federated gradient-clustering experiment runner"};
  app.require_subcommand(1);

  bool list_json = false;
  CLI::App* list_cmd = app.add_subcommand("list", "List the experiment catalog");
  list_cmd->add_flag("--json", list_json, "Machine-readable listing");

  std::string experiment;
  std::string config_path;
  std::string seed_range;
  std::string algo_list;
  std::string out_dir = "out";
  std::string dump_data;
  std::vector<std::uint64_t> seed_flags;
  std::vector<std::string> overrides;
  double eta = -1.0;
  int rounds = -1;

  CLI::App* run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("experiment", experiment, "Experiment name (see `list`)")->required();
  run_cmd->add_option("--config", config_path, "key = value config file");
  run_cmd->add_option("--seed", seed_flags, "Seed (repeatable)");
  run_cmd->add_option("--seeds", seed_range, "Inclusive seed range A..B");
  run_cmd->add_option("--algos", algo_list, "Comma-separated algorithm list");
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--set", overrides, "Override a config key, key=value (repeatable)");
  run_cmd->add_option("--eta", eta, "Learning rate override");
  run_cmd->add_option("--rounds", rounds, "Round-count override");
  run_cmd->add_option("--dump-data", dump_data, "Also write the generated dataset to this CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fedcluster::kExitValidation;
  }

  if (list_cmd->parsed()) return do_list(list_json);

  fedcluster::RunRequest req;
  req.experiment = experiment;
  req.out_dir = out_dir;
  req.algos = split_commas(algo_list);
  try {
    if (!config_path.empty()) req.options = fedcluster::parse_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fedcluster::kExitValidation;
  }
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      return fedcluster::kExitValidation;
    }
    req.options[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (eta > 0.0) req.options["eta"] = std::to_string(eta);
  if (rounds > 0) req.options["rounds"] = std::to_string(rounds);
  if (!dump_data.empty()) req.options["dump_data"] = dump_data;

  req.seeds = seed_flags;
  if (!seed_range.empty() && !parse_seed_range(seed_range, &req.seeds)) {
    std::cerr << "error: --seeds expects A..B with A <= B\n";
    return fedcluster::kExitValidation;
  }
  if (req.seeds.empty() && seed_range.empty() && seed_flags.empty()) {
    req.seeds = {0};
  }

  std::string error;
  const int code = fedcluster::run_experiment(req, &error);
  if (!error.empty()) {
    std::cerr << "error: " << error << "\n";
  } else if (code == fedcluster::kExitDivergence) {
    std::cerr << "divergence detected; partial outputs kept in " << out_dir << "\n";
  }
  return code;
}
