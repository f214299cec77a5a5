#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fedcluster/experiments.hpp"

#ifndef FEDCLUSTER_BIN
#error "FEDCLUSTER_BIN must point at the CLI binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path out_file = fs::temp_directory_path() / "fedcluster_cli_out.txt";
  const std::string cmd =
      env + " " + std::string(FEDCLUSTER_BIN) + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CommandResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream buf;
  buf << in.rdbuf();
  res.output = buf.str();
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("list prints the eight experiment names") {
  const CommandResult res = run_cli("list");
  CHECK(res.exit_code == 0);
  for (const char* name : {"example1", "example2", "example3", "blobs", "lower_bound",
                           "synthetic_regression", "assumption_trace", "byzantine"}) {
    CHECK(res.output.find(name) != std::string::npos);
  }
}

TEST_CASE("list --json is machine readable") {
  const CommandResult res = run_cli("list --json");
  CHECK(res.exit_code == 0);
  const json listing = json::parse(res.output);
  REQUIRE(listing.is_array());
  CHECK(listing.size() == 8);
  CHECK(listing[0].contains("name"));
}

TEST_CASE("unknown experiments and flags are usage errors") {
  CHECK(run_cli("run no_such_experiment").exit_code == 2);
  CHECK(run_cli("list --no-such-flag").exit_code == 2);
  CHECK(run_cli("run example2 --seeds 5..1").exit_code == 2);
  CHECK(run_cli("run example2 --algos not_an_algo").exit_code == 2);
}

TEST_CASE("a run writes one CSV per job with the documented columns") {
  const fs::path dir = fresh_dir("fedcluster_cli_run");
  const CommandResult res =
      run_cli("run example2 --algos global --seeds 0..2 --out " + dir.string());
  CHECK(res.exit_code == 0);
  for (int seed = 0; seed < 3; ++seed) {
    const fs::path csv = dir / ("example2_global_seed" + std::to_string(seed) + ".csv");
    REQUIRE(fs::exists(csv));
    const std::string content = slurp(csv);
    CHECK(content.rfind("experiment,algo,seed,round,client,metric,value\n", 0) == 0);
    CHECK(content.find("example2,global," + std::to_string(seed) + ",1,0,") != std::string::npos);
  }
  const json summary = json::parse(slurp(dir / "example2_summary.json"));
  CHECK(summary["experiment"] == "example2");
  CHECK(summary["checks"].is_object());
}

TEST_CASE("csv output is byte-identical across thread counts") {
  const fs::path d1 = fresh_dir("fedcluster_cli_t1");
  const fs::path d4 = fresh_dir("fedcluster_cli_t4");
  CHECK(run_cli("run example2 --seeds 0..3 --out " + d1.string(),
                "FEDCLUSTER_THREADS=1").exit_code == 0);
  CHECK(run_cli("run example2 --seeds 0..3 --out " + d4.string(),
                "FEDCLUSTER_THREADS=4").exit_code == 0);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(d1)) {
    if (entry.path().extension() != ".csv") continue;
    CHECK(slurp(entry.path()) == slurp(d4 / entry.path().filename()));
    ++compared;
  }
  CHECK(compared > 0);
}

TEST_CASE("repeated runs are byte-identical") {
  const fs::path a = fresh_dir("fedcluster_cli_rep_a");
  const fs::path b = fresh_dir("fedcluster_cli_rep_b");
  CHECK(run_cli("run example1 --out " + a.string()).exit_code == 0);
  CHECK(run_cli("run example1 --out " + b.string()).exit_code == 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }
}

TEST_CASE("config files supply options and flags override them") {
  const fs::path dir = fresh_dir("fedcluster_cli_cfg");
  const fs::path cfg = fs::temp_directory_path() / "fedcluster_test.cfg";
  {
    std::ofstream out(cfg);
    out << "# example2 with a shortened run\n";
    out << "rounds = 50\n";
    out << "eta = 0.1\n";
  }
  const CommandResult res = run_cli("run example2 --algos global --config " + cfg.string() +
                                    " --out " + dir.string());
  CHECK(res.exit_code == 0);
  const std::string csv = slurp(dir / "example2_global_seed0.csv");
  CHECK(csv.find(",50,") != std::string::npos);   // reaches round 50
  CHECK(csv.find(",51,") == std::string::npos);   // but not 51
}

TEST_CASE("malformed config files are validation errors") {
  const fs::path cfg = fs::temp_directory_path() / "fedcluster_bad.cfg";
  {
    std::ofstream out(cfg);
    out << "rounds 50\n";  // missing '='
  }
  CHECK(run_cli("run example2 --config " + cfg.string()).exit_code == 2);
  CHECK(run_cli("run example2 --config /no/such/file.cfg").exit_code == 2);
}

TEST_CASE("config parser handles comments, blanks, and reports bad lines") {
  const fs::path cfg = fs::temp_directory_path() / "fedcluster_parse.cfg";
  {
    std::ofstream out(cfg);
    out << "# comment\n\n  eta = 0.25  \nrounds=10\n";
  }
  const auto opts = fedcluster::parse_config_file(cfg.string());
  CHECK(opts.at("eta") == "0.25");
  CHECK(opts.at("rounds") == "10");
}

TEST_CASE("divergence is reported with exit code 3 and partial outputs") {
  const fs::path dir = fresh_dir("fedcluster_cli_div");
  // example2 starts at the symmetric point where the mean gradient is exactly
  // zero, so it cannot blow up; standalone regression training can.
  const CommandResult res =
      run_cli("run synthetic_regression --algos local --set eta=1e9 --out " + dir.string());
  CHECK(res.exit_code == 3);
  CHECK(fs::exists(dir / "synthetic_regression_local_seed0.csv"));
  const json summary = json::parse(slurp(dir / "synthetic_regression_summary.json"));
  bool any_diverged = false;
  for (const auto& job : summary["jobs"]) {
    if (job.value("diverged", false)) any_diverged = true;
  }
  CHECK(any_diverged);
}

TEST_CASE("summary embeds the built-in acceptance checks") {
  const fs::path dir = fresh_dir("fedcluster_cli_checks");
  CHECK(run_cli("run example1 --out " + dir.string()).exit_code == 0);
  const json summary = json::parse(slurp(dir / "example1_summary.json"));
  CHECK(summary["checks"]["myopic_client2_stuck"] == true);
  CHECK(summary["checks"]["fc_client2_recovers"] == true);
  CHECK(summary["checks"]["fc_partition_12_3"] == true);
}
