#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "safekernel/io.hpp"

namespace fs = std::filesystem;
using safekernel::io::Json;

namespace {

const std::string kCli = SAFEKERNEL_CLI_PATH;
const std::string kScenarios = SAFEKERNEL_SCENARIO_DIR;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() /
                       ("safekernel_cli_out_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++) + ".txt");
  const std::string cmd = kCli + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::ostringstream buf;
  buf << in.rdbuf();
  result.stdout_text = buf.str();
  fs::remove(out);
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() /
                       ("safekernel_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("simulate runs the bundled scenario to convergence", "[cli]") {
  const fs::path out = fresh_dir("simulate");
  const RunResult r = run_cli("simulate " + kScenarios + "/k5_scripted_adversary.json -o " +
                              out.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(out / "trajectory.csv"));
  REQUIRE(fs::exists(out / "summary.json"));
  REQUIRE(fs::exists(out / "plot.json"));

  const Json summary = Json::parse(slurp(out / "summary.json"));
  REQUIRE(summary.at("terminal") == "converged");
  REQUIRE(summary.at("config").at("dim") == 2);
  const Json plot = Json::parse(slurp(out / "plot.json"));
  REQUIRE(plot.at("omega0_vertices").size() == 4);
  fs::remove_all(out);
}

TEST_CASE("simulate exit code distinguishes the round limit", "[cli]") {
  const fs::path out = fresh_dir("roundlimit");
  const RunResult r = run_cli("simulate " + kScenarios + "/k5_scripted_adversary.json -o " +
                              out.string() + " --max-rounds 1");
  REQUIRE(r.exit_code == 3);
  // a 1-round trajectory: rounds 0 and 1
  std::istringstream csv(slurp(out / "trajectory.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  REQUIRE(rows == 1 + 2 * 5);
  fs::remove_all(out);
}

TEST_CASE("simulate rejects invalid scenarios with exit 2", "[cli]") {
  const fs::path dir = fresh_dir("invalid");
  const fs::path bad = dir / "bad.json";
  spit(bad, R"({"nodes": 3, "edges": [[0,1],[1,2]], "dim": 2, "F": 1, "model": "total",
    "faulty": {"0": {"kind": "constant", "value": [0, 0]}},
    "initial": {"0": [0,0], "1": [1,1], "2": [2,2]},
    "weights": {"kind": "uniform"}})");
  REQUIRE(run_cli("simulate " + bad.string() + " -o " + dir.string()).exit_code == 2);
  REQUIRE(run_cli("simulate " + dir.string() + "/missing.json").exit_code == 1);
  spit(bad, "{ not json");
  REQUIRE(run_cli("simulate " + bad.string()).exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("simulate output is byte-identical across runs", "[cli]") {
  const fs::path a = fresh_dir("repro_a");
  const fs::path b = fresh_dir("repro_b");
  const std::string scenario = kScenarios + "/k5_scripted_adversary.json";
  REQUIRE(run_cli("simulate " + scenario + " -o " + a.string()).exit_code == 0);
  REQUIRE(run_cli("simulate " + scenario + " -o " + b.string()).exit_code == 0);
  REQUIRE(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  REQUIRE(slurp(a / "summary.json") == slurp(b / "summary.json"));
  REQUIRE(slurp(a / "plot.json") == slurp(b / "plot.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("robustness reports the bundled graphs", "[cli]") {
  const RunResult k5 = run_cli("robustness " + kScenarios + "/k5.json -r 3 -s 2");
  REQUIRE(k5.exit_code == 0);
  const Json k5_report = Json::parse(k5.stdout_text);
  REQUIRE(k5_report.at("verdict") == true);
  REQUIRE(k5_report.at("r") == 3);
  REQUIRE(k5_report.at("s") == 2);
  REQUIRE(k5_report.at("witness").is_null());

  const RunResult p3 = run_cli("robustness " + kScenarios + "/p3.json -r 2");
  REQUIRE(p3.exit_code == 4);
  const Json p3_report = Json::parse(p3.stdout_text);
  REQUIRE(p3_report.at("verdict") == false);
  REQUIRE(p3_report.at("witness").is_array());

  REQUIRE(run_cli("robustness " + kScenarios + "/k5.json -r 4").exit_code == 4);
}

TEST_CASE("robustness enforces the exhaustive cap", "[cli]") {
  const fs::path dir = fresh_dir("bigraph");
  const fs::path big = dir / "p13.json";
  Json edges = Json::array();
  for (int i = 0; i + 1 < 13; ++i) edges.push_back({i, i + 1});
  spit(big, Json{{"nodes", 13}, {"edges", edges}}.dump());
  REQUIRE(run_cli("robustness " + big.string() + " -r 1").exit_code == 2);
  REQUIRE(run_cli("robustness " + big.string() + " -r 1 --cap 13").exit_code == 0);
  fs::remove_all(dir);
}

TEST_CASE("kernel prints the polytope and the trimmed box", "[cli]") {
  const RunResult r = run_cli("kernel " + kScenarios + "/square_plus_center.txt -n 1");
  REQUIRE(r.exit_code == 0);
  const Json out = Json::parse(r.stdout_text);
  REQUIRE(out.at("kernel").at("empty") == false);
  REQUIRE(out.at("kernel").at("vertices").size() == 1);
  REQUIRE(out.at("kernel").at("vertices")[0] == Json::array({1.0, 1.0}));
  REQUIRE(out.at("trimmed_box").at("vertices").size() == 4);
  REQUIRE(out.at("config").at("n") == 1);

  // removing three of five points leaves disjoint segment hulls: empty kernel
  const RunResult empty = run_cli("kernel " + kScenarios + "/square_plus_center.txt -n 3");
  REQUIRE(empty.exit_code == 4);
  REQUIRE(Json::parse(empty.stdout_text).at("kernel").at("empty") == true);
}

TEST_CASE("verify accepts simulate output and rejects tampering", "[cli]") {
  const fs::path out = fresh_dir("verify");
  const std::string scenario = kScenarios + "/k5_scripted_adversary.json";
  REQUIRE(run_cli("simulate " + scenario + " -o " + out.string()).exit_code == 0);

  const RunResult ok = run_cli("verify " + (out / "trajectory.csv").string() + " " + scenario);
  REQUIRE(ok.exit_code == 0);
  const Json report = Json::parse(ok.stdout_text);
  REQUIRE(report.at("pass") == true);
  REQUIRE(report.at("validity").at("status") == "pass");
  REQUIRE(report.at("agreement") == "pass");
  REQUIRE(report.at("gamma").is_object());

  // tamper: move one benign state far outside the initial hull
  std::string csv = slurp(out / "trajectory.csv");
  const auto pos = csv.find("\n2,1,benign,");
  REQUIRE(pos != std::string::npos);
  const auto eol = csv.find('\n', pos + 1);
  csv.replace(pos, eol - pos, "\n2,1,benign,100,100");
  spit(out / "tampered.csv", csv);
  const RunResult bad = run_cli("verify " + (out / "tampered.csv").string() + " " + scenario);
  REQUIRE(bad.exit_code == 4);
  const Json bad_report = Json::parse(bad.stdout_text);
  REQUIRE(bad_report.at("validity").at("status") == "fail");
  REQUIRE(bad_report.at("validity").at("round") == 2);
  REQUIRE(bad_report.at("pass") == false);

  // mismatched files: scenario with a different dimension
  const fs::path other = out / "other.json";
  Json mutated = Json::parse(slurp(fs::path(scenario)));
  mutated["dim"] = 1;
  mutated["faulty"]["0"] = Json{{"kind", "constant"}, {"value", {0.0}}};
  Json initial = Json::object();
  for (int i = 0; i < 5; ++i) initial[std::to_string(i)] = Json::array({0.5 * i});
  mutated["initial"] = initial;
  spit(other, mutated.dump());
  REQUIRE(run_cli("verify " + (out / "trajectory.csv").string() + " " + other.string())
              .exit_code == 2);
  fs::remove_all(out);
}

TEST_CASE("verify reports not-applicable agreement for truncated runs", "[cli]") {
  const fs::path out = fresh_dir("truncated");
  const std::string scenario = kScenarios + "/k5_scripted_adversary.json";
  REQUIRE(run_cli("simulate " + scenario + " -o " + out.string() + " --max-rounds 4")
              .exit_code == 3);
  const RunResult r = run_cli("verify " + (out / "trajectory.csv").string() + " " + scenario);
  REQUIRE(r.exit_code == 0);  // validity and nesting still pass
  const Json report = Json::parse(r.stdout_text);
  REQUIRE(report.at("agreement") == "not-applicable");
  REQUIRE(report.at("gamma").is_null());
  fs::remove_all(out);
}
