// Command-line front end: scenario simulation, robustness analysis, kernel
// queries, and trajectory verification. Progress goes to stderr; machine
// readable results go to stdout or files.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "safekernel/engine.hpp"
#include "safekernel/geometry.hpp"
#include "safekernel/graph.hpp"
#include "safekernel/io.hpp"
#include "safekernel/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;         // I/O or parse failure
constexpr int kExitValidation = 2;    // semantic validation failure
constexpr int kExitRoundLimit = 3;    // simulation hit max_rounds
constexpr int kExitVerification = 4;  // negative verification outcome

using safekernel::io::Json;

struct ScenarioOverrides {
  std::optional<double> epsilon;
  std::optional<std::size_t> max_rounds;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_geom;
  std::optional<double> tol_vertex;

  void apply(safekernel::Scenario& sc) const {
    if (epsilon) sc.epsilon = *epsilon;
    if (max_rounds) sc.max_rounds = *max_rounds;
    if (seed) sc.seed = *seed;
    if (tol_geom) sc.tol_geom = *tol_geom;
    if (tol_vertex) sc.tol_vertex = *tol_vertex;
  }
};

void add_override_flags(CLI::App* sub, ScenarioOverrides& ov) {
  sub->add_option("--epsilon", ov.epsilon, "Override the agreement tolerance");
  sub->add_option("--max-rounds", ov.max_rounds, "Override the round limit");
  sub->add_option("--seed", ov.seed, "Override the scenario seed");
  sub->add_option("--tol-geom", ov.tol_geom, "Override the geometric tolerance");
  sub->add_option("--tol-vertex", ov.tol_vertex, "Override the vertex dedup tolerance");
}

int cmd_simulate(const std::string& scenario_path, const std::string& outdir,
                 const ScenarioOverrides& ov) {
  safekernel::Scenario sc = safekernel::io::load_scenario(scenario_path);
  ov.apply(sc);
  sc.validate();

  const safekernel::Trajectory traj = safekernel::simulate(sc);

  std::filesystem::create_directories(outdir);
  const std::string base = outdir + "/";
  safekernel::io::write_file(base + "trajectory.csv",
                             safekernel::io::trajectory_to_csv(traj, sc));
  safekernel::io::write_file(base + "summary.json",
                             safekernel::io::summary_to_json(traj, sc).dump(2) + "\n");
  safekernel::io::write_file(base + "plot.json",
                             safekernel::io::plot_data_to_json(traj, sc).dump(2) + "\n");

  const bool converged = traj.terminal == safekernel::Terminal::Converged;
  std::cerr << "simulate: " << (converged ? "converged" : "round-limit") << " after "
            << traj.rounds.size() - 1 << " rounds, final benign diameter "
            << traj.rounds.back().benign_diameter << "\n";
  std::cerr << "simulate: wrote " << base << "trajectory.csv, summary.json, plot.json\n";
  return converged ? kExitOk : kExitRoundLimit;
}

int cmd_robustness(const std::string& graph_path, std::size_t r,
                   const std::optional<std::size_t>& s, bool strict, std::size_t cap) {
  const safekernel::Network g =
      safekernel::io::network_from_json(safekernel::io::parse_json_file(graph_path));
  const safekernel::RobustnessReport report =
      s ? safekernel::is_rs_robust(g, r, *s, cap) : safekernel::is_r_robust(g, r, strict, cap);
  std::cout << safekernel::io::robustness_report_to_json(report, strict, cap).dump(2) << "\n";
  return report.verdict ? kExitOk : kExitVerification;
}

int cmd_kernel(const std::string& points_path, std::size_t n, double tol_geom,
               double tol_vertex) {
  const safekernel::PointSet points =
      safekernel::io::point_set_from_text(safekernel::io::read_file(points_path));
  const safekernel::Polytope kernel = safekernel::safe_kernel(points, n, tol_geom, tol_vertex);

  Json box(nullptr);
  if (points.size() >= 2 * n + 1) {
    box = safekernel::io::polytope_to_json(safekernel::trimmed_box(points, n, tol_vertex));
  }
  const Json out{{"format_version", safekernel::io::kFormatVersion},
                 {"config", Json{{"n", n},
                                 {"points", points_path},
                                 {"tolerances", Json{{"geom", tol_geom}, {"vertex", tol_vertex}}}}},
                 {"kernel", safekernel::io::polytope_to_json(kernel)},
                 {"trimmed_box", box}};
  std::cout << out.dump(2) << "\n";
  return kernel.empty ? kExitVerification : kExitOk;
}

int cmd_verify(const std::string& trajectory_path, const std::string& scenario_path,
               double tol, std::size_t window, const ScenarioOverrides& ov) {
  safekernel::Scenario sc = safekernel::io::load_scenario(scenario_path);
  ov.apply(sc);
  sc.validate();
  const safekernel::Trajectory traj = safekernel::io::trajectory_from_csv(
      safekernel::io::read_file(trajectory_path), sc);
  const safekernel::AuditReport report = safekernel::audit_trajectory(traj, sc, tol, window);
  std::cout << safekernel::io::audit_to_json(report, sc).dump(2) << "\n";
  return report.all_pass() ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resilient multi-dimensional consensus: simulation and verification"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string outdir = ".";
  ScenarioOverrides sim_ov;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run a scenario and export trajectory CSV, summary and plot JSON");
  simulate->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  simulate->add_option("-o,--output", outdir, "Output directory")->capture_default_str();
  add_override_flags(simulate, sim_ov);

  std::string graph_path;
  std::size_t robust_r = 1;
  std::optional<std::size_t> robust_s;
  bool strict = false;
  std::size_t cap = 12;
  CLI::App* robustness =
      app.add_subcommand("robustness", "Decide r- or (r,s)-robustness exhaustively");
  robustness->add_option("graph", graph_path, "Graph JSON file")->required();
  robustness->add_option("-r,--r", robust_r, "Robustness parameter r")->required();
  robustness->add_option("-s,--s", robust_s, "Optional second parameter s");
  robustness->add_flag("--strict", strict,
                       "Literal more-than-one-node reading of r-robustness");
  robustness->add_option("--cap", cap, "Exhaustive node-count cap")->capture_default_str();

  std::string points_path;
  std::size_t kernel_n = 0;
  double kernel_tol_geom = safekernel::kTolGeom;
  double kernel_tol_vertex = safekernel::kTolVertex;
  CLI::App* kernel = app.add_subcommand(
      "kernel", "Compute the safe kernel of a point set with n removals");
  kernel->add_option("points", points_path, "Point list, one point per line")->required();
  kernel->add_option("-n,--n", kernel_n, "Number of removed points")->required();
  kernel->add_option("--tol-geom", kernel_tol_geom, "Geometric tolerance")
      ->capture_default_str();
  kernel->add_option("--tol-vertex", kernel_tol_vertex, "Vertex dedup tolerance")
      ->capture_default_str();

  std::string verify_traj_path;
  std::string verify_scenario_path;
  double verify_tol = 1e-6;
  std::size_t verify_window = 10;
  ScenarioOverrides verify_ov;
  CLI::App* verify = app.add_subcommand(
      "verify", "Audit a trajectory CSV against its scenario (validity, nesting, agreement)");
  verify->add_option("trajectory", verify_traj_path, "Trajectory CSV file")->required();
  verify->add_option("scenario", verify_scenario_path, "Scenario JSON file")->required();
  verify->add_option("--tol", verify_tol, "Membership tolerance")->capture_default_str();
  verify->add_option("--window", verify_window, "Contraction-ratio window")
      ->capture_default_str();
  add_override_flags(verify, verify_ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(scenario_path, outdir, sim_ov);
    if (robustness->parsed()) return cmd_robustness(graph_path, robust_r, robust_s, strict, cap);
    if (kernel->parsed()) return cmd_kernel(points_path, kernel_n, kernel_tol_geom,
                                            kernel_tol_vertex);
    if (verify->parsed()) return cmd_verify(verify_traj_path, verify_scenario_path, verify_tol,
                                            verify_window, verify_ov);
  } catch (const safekernel::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParse;
  } catch (const safekernel::ScenarioError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const safekernel::UnsupportedSizeError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const safekernel::DegenerateKernelError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const safekernel::SolverFailure& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitVerification;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParse;
  }
  return kExitOk;
}
