#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "safekernel/common.hpp"
#include "safekernel/engine.hpp"
#include "safekernel/geometry.hpp"
#include "safekernel/graph.hpp"
#include "safekernel/oracle.hpp"

namespace safekernel::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Basic helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path);
  out << content;
}

inline Json parse_json_file(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(path + ": " + err.what());
  }
}

/// Shortest round-tripping decimal representation of a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    // try to shorten
    for (int prec = 1; prec < 17; ++prec) {
      char probe[32];
      std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
      std::sscanf(probe, "%lf", &back);
      if (back == v) return probe;
    }
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Graph file: {"nodes": N, "edges": [[i, j], ...]}
// ---------------------------------------------------------------------------

inline Network network_from_json(const Json& j) {
  try {
    const std::size_t n = j.at("nodes").get<std::size_t>();
    std::vector<std::pair<int, int>> edges;
    for (const Json& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("graph: malformed edge entry");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return Network(n, edges);
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("graph: ") + err.what());
  } catch (const std::invalid_argument& err) {
    throw ParseError(std::string("graph: ") + err.what());
  }
}

inline Json network_to_json(const Network& g) {
  Json edges = Json::array();
  for (std::size_t i = 0; i < g.node_count; ++i) {
    for (int j : g.adjacency[i]) {
      if (static_cast<int>(i) < j) edges.push_back({i, j});
    }
  }
  return Json{{"nodes", g.node_count}, {"edges", edges}};
}

// ---------------------------------------------------------------------------
// Point-set text: one point per line, whitespace-separated coordinates
// ---------------------------------------------------------------------------

inline PointSet point_set_from_text(const std::string& text) {
  std::vector<Point> points;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::istringstream fields(line);
    Point p;
    double v = 0.0;
    while (fields >> v) p.push_back(v);
    if (!fields.eof()) {
      throw ParseError("points: bad token on line " + std::to_string(lineno));
    }
    if (p.empty()) continue;  // blank line
    if (!points.empty() && p.size() != points.front().size()) {
      throw ParseError("points: inconsistent dimension on line " + std::to_string(lineno));
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) throw ParseError("points: no points found");
  return PointSet(std::move(points));
}

// ---------------------------------------------------------------------------
// Polytope: {"vertices": [...], "halfspaces": [{normal, offset}], "empty": b}
// ---------------------------------------------------------------------------

inline Json polytope_to_json(const Polytope& p) {
  Json vertices = Json::array();
  for (const Point& v : p.vertices) vertices.push_back(v);
  Json halfspaces = Json::array();
  for (const Halfspace& h : p.halfspaces) {
    halfspaces.push_back(Json{{"normal", h.normal}, {"offset", h.offset}});
  }
  return Json{{"vertices", vertices}, {"halfspaces", halfspaces}, {"empty", p.empty}};
}

// ---------------------------------------------------------------------------
// Scenario file
// ---------------------------------------------------------------------------

inline AdversaryStrategy strategy_from_json(const Json& j) {
  AdversaryStrategy s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "scripted") {
    s.kind = AdversaryStrategy::Kind::Scripted;
    for (const Json& expr : j.at("coords")) {
      s.scripts.push_back(script::Expr::parse(expr.get<std::string>()));
    }
  } else if (kind == "constant") {
    s.kind = AdversaryStrategy::Kind::Constant;
    s.constant = j.at("value").get<Point>();
  } else if (kind == "random-box") {
    s.kind = AdversaryStrategy::Kind::RandomBox;
    s.box_lo = j.at("lo").get<Point>();
    s.box_hi = j.at("hi").get<Point>();
  } else if (kind == "per-recipient-scripted") {
    s.kind = AdversaryStrategy::Kind::PerRecipientScripted;
    for (const auto& [key, scripts] : j.at("recipients").items()) {
      std::vector<script::Expr> exprs;
      for (const Json& expr : scripts) {
        exprs.push_back(script::Expr::parse(expr.get<std::string>()));
      }
      s.recipients.emplace(std::stoi(key), std::move(exprs));
    }
  } else {
    throw ParseError("scenario: unknown strategy kind \"" + kind + "\"");
  }
  return s;
}

inline Json strategy_to_json(const AdversaryStrategy& s) {
  switch (s.kind) {
    case AdversaryStrategy::Kind::Scripted: {
      Json coords = Json::array();
      for (const script::Expr& e : s.scripts) coords.push_back(e.text());
      return Json{{"kind", "scripted"}, {"coords", coords}};
    }
    case AdversaryStrategy::Kind::Constant:
      return Json{{"kind", "constant"}, {"value", s.constant}};
    case AdversaryStrategy::Kind::RandomBox:
      return Json{{"kind", "random-box"}, {"lo", s.box_lo}, {"hi", s.box_hi}};
    case AdversaryStrategy::Kind::PerRecipientScripted: {
      Json recipients = Json::object();
      for (const auto& [node, exprs] : s.recipients) {
        Json coords = Json::array();
        for (const script::Expr& e : exprs) coords.push_back(e.text());
        recipients[std::to_string(node)] = coords;
      }
      return Json{{"kind", "per-recipient-scripted"}, {"recipients", recipients}};
    }
  }
  throw std::logic_error("strategy_to_json: unreachable");
}

inline Scenario scenario_from_json(const Json& j) {
  try {
    Scenario sc;
    sc.network = network_from_json(j);
    sc.dim = j.at("dim").get<std::size_t>();
    sc.faults.bound = j.at("F").get<std::size_t>();
    const std::string model = j.at("model").get<std::string>();
    if (model == "total") {
      sc.faults.model = AttackModel::FTotal;
    } else if (model == "local") {
      sc.faults.model = AttackModel::FLocal;
    } else {
      throw ParseError("scenario: model must be \"total\" or \"local\"");
    }
    if (j.contains("faulty")) {
      for (const auto& [key, entry] : j.at("faulty").items()) {
        const int node = std::stoi(key);
        sc.faults.members.insert(node);
        sc.strategies.emplace(node, strategy_from_json(entry));
      }
    }
    sc.initial.assign(sc.network.node_count, Point{});
    for (const auto& [key, coords] : j.at("initial").items()) {
      const int node = std::stoi(key);
      if (node < 0 || static_cast<std::size_t>(node) >= sc.network.node_count) {
        throw ParseError("scenario: initial state for unknown node " + key);
      }
      sc.initial[static_cast<std::size_t>(node)] = coords.get<Point>();
    }
    const Json& weights = j.at("weights");
    const std::string wkind = weights.at("kind").get<std::string>();
    if (wkind == "uniform") {
      sc.weights.kind = WeightPolicy::Kind::Uniform;
    } else if (wkind == "custom") {
      sc.weights.kind = WeightPolicy::Kind::Custom;
      sc.weights.self_weight = weights.at("self_weight").get<double>();
    } else {
      throw ParseError("scenario: weights.kind must be \"uniform\" or \"custom\"");
    }
    if (j.contains("alpha")) sc.weights.alpha = j.at("alpha").get<double>();
    if (j.contains("epsilon")) sc.epsilon = j.at("epsilon").get<double>();
    if (j.contains("max_rounds")) sc.max_rounds = j.at("max_rounds").get<std::size_t>();
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tolerances")) {
      const Json& tol = j.at("tolerances");
      if (tol.contains("geom")) sc.tol_geom = tol.at("geom").get<double>();
      if (tol.contains("vertex")) sc.tol_vertex = tol.at("vertex").get<double>();
    }
    return sc;
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("scenario: ") + err.what());
  } catch (const std::invalid_argument& err) {
    throw ParseError(std::string("scenario: ") + err.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  return scenario_from_json(parse_json_file(path));
}

/// The resolved configuration, echoed into every output artifact.
inline Json scenario_to_json(const Scenario& sc) {
  const Json graph = network_to_json(sc.network);
  Json faulty = Json::object();
  for (const auto& [node, strategy] : sc.strategies) {
    faulty[std::to_string(node)] = strategy_to_json(strategy);
  }
  Json initial = Json::object();
  for (std::size_t i = 0; i < sc.initial.size(); ++i) {
    initial[std::to_string(i)] = sc.initial[i];
  }
  Json weights = sc.weights.kind == WeightPolicy::Kind::Uniform
                     ? Json{{"kind", "uniform"}}
                     : Json{{"kind", "custom"}, {"self_weight", sc.weights.self_weight}};
  return Json{{"nodes", graph.at("nodes")},
              {"edges", graph.at("edges")},
              {"dim", sc.dim},
              {"F", sc.faults.bound},
              {"model", sc.faults.model == AttackModel::FTotal ? "total" : "local"},
              {"faulty", faulty},
              {"initial", initial},
              {"weights", weights},
              {"alpha", sc.weights.alpha},
              {"epsilon", sc.epsilon},
              {"max_rounds", sc.max_rounds},
              {"seed", sc.seed},
              {"tolerances", Json{{"geom", sc.tol_geom}, {"vertex", sc.tol_vertex}}}};
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header k,agent,role,x_0,...,x_{d-1}
// ---------------------------------------------------------------------------

inline std::string trajectory_to_csv(const Trajectory& traj, const Scenario& sc) {
  std::ostringstream out;
  out << "k,agent,role";
  for (std::size_t p = 0; p < sc.dim; ++p) out << ",x_" << p;
  out << "\n";
  for (const RoundRecord& rec : traj.rounds) {
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
      out << rec.round << "," << i << ","
          << (sc.is_faulty(static_cast<int>(i)) ? "faulty" : "benign");
      for (double c : rec.states[i]) out << "," << format_double(c);
      out << "\n";
    }
  }
  return out.str();
}

/// Parses a trajectory CSV back. Checks correspondence with the scenario
/// (same node set, same dimension, same roles, contiguous rounds) and infers
/// the terminal state from the last benign diameter.
inline Trajectory trajectory_from_csv(const std::string& text, const Scenario& sc) {
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) throw ParseError("trajectory: empty file");
  {
    std::ostringstream expect;
    expect << "k,agent,role";
    for (std::size_t p = 0; p < sc.dim; ++p) expect << ",x_" << p;
    if (line != expect.str()) {
      // correspondence problem: dimension or layout does not fit the scenario
      throw ScenarioError("trajectory: header does not correspond to the scenario "
                          "(expected \"" +
                          expect.str() + "\")");
    }
  }

  std::map<std::size_t, std::vector<Point>> rounds;
  std::map<std::size_t, std::vector<bool>> seen;
  std::size_t lineno = 1;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string item;
    auto next_field = [&]() {
      if (!std::getline(fields, item, ',')) {
        throw ParseError("trajectory: truncated row on line " + std::to_string(lineno));
      }
      return item;
    };
    std::size_t k = 0;
    int agent = 0;
    Point p(sc.dim);
    std::string role;
    try {
      k = std::stoul(next_field());
      agent = std::stoi(next_field());
      role = next_field();
      for (std::size_t c = 0; c < sc.dim; ++c) p[c] = std::stod(next_field());
    } catch (const std::logic_error&) {
      throw ParseError("trajectory: bad field on line " + std::to_string(lineno));
    }
    if (agent < 0 || static_cast<std::size_t>(agent) >= sc.network.node_count) {
      throw ScenarioError("trajectory: agent on line " + std::to_string(lineno) +
                          " does not exist in the scenario");
    }
    const bool faulty = sc.is_faulty(agent);
    if (role != (faulty ? "faulty" : "benign")) {
      throw ScenarioError("trajectory: role of agent " + std::to_string(agent) +
                          " on line " + std::to_string(lineno) +
                          " does not match the scenario");
    }
    auto [it, created] = rounds.try_emplace(k, sc.network.node_count, Point(sc.dim, 0.0));
    auto [sit, screated] = seen.try_emplace(k, sc.network.node_count, false);
    if (sit->second[static_cast<std::size_t>(agent)]) {
      throw ParseError("trajectory: duplicate row for round " + std::to_string(k) +
                       ", agent " + std::to_string(agent));
    }
    sit->second[static_cast<std::size_t>(agent)] = true;
    it->second[static_cast<std::size_t>(agent)] = std::move(p);
  }
  if (rounds.empty()) throw ParseError("trajectory: no data rows");

  Trajectory traj;
  std::size_t expected = 0;
  for (const auto& [k, states] : rounds) {
    if (k != expected++) throw ScenarioError("trajectory: rounds are not contiguous from 0");
    for (bool present : seen.at(k)) {
      if (!present) {
        throw ScenarioError("trajectory: round " + std::to_string(k) + " is missing agents");
      }
    }
    traj.rounds.push_back({k, states, {}, 0.0});
  }
  for (RoundRecord& rec : traj.rounds) {
    std::vector<Point> benign;
    for (int b : sc.benign_nodes()) benign.push_back(rec.states[static_cast<std::size_t>(b)]);
    rec.benign_diameter = diameter(benign);
  }
  traj.terminal = traj.rounds.back().benign_diameter < sc.epsilon ? Terminal::Converged
                                                                  : Terminal::RoundLimit;
  return traj;
}

// ---------------------------------------------------------------------------
// Summary / plot data / audit JSON
// ---------------------------------------------------------------------------

inline Json summary_to_json(const Trajectory& traj, const Scenario& sc) {
  const std::vector<int> benign = sc.benign_nodes();
  const RoundRecord& last = traj.rounds.back();
  Point final_point(sc.dim, 0.0);
  for (int b : benign) {
    add_scaled_inplace(final_point, last.states[static_cast<std::size_t>(b)],
                       1.0 / static_cast<double>(benign.size()));
  }
  return Json{{"format_version", kFormatVersion},
              {"config", scenario_to_json(sc)},
              {"terminal", traj.terminal == Terminal::Converged ? "converged" : "round-limit"},
              {"rounds", traj.rounds.size() - 1},
              {"final_diameter", last.benign_diameter},
              {"final_point", final_point}};
}

/// Per-agent polylines plus the hull of the benign initial states, ready
/// for external plotting.
inline Json plot_data_to_json(const Trajectory& traj, const Scenario& sc) {
  Json agents = Json::object();
  for (std::size_t i = 0; i < sc.network.node_count; ++i) {
    Json polyline = Json::array();
    for (const RoundRecord& rec : traj.rounds) polyline.push_back(rec.states[i]);
    agents[std::to_string(i)] = polyline;
  }
  Json roles = Json::object();
  for (std::size_t i = 0; i < sc.network.node_count; ++i) {
    roles[std::to_string(i)] = sc.is_faulty(static_cast<int>(i)) ? "faulty" : "benign";
  }
  std::vector<Point> benign_initial;
  for (int b : sc.benign_nodes()) {
    benign_initial.push_back(sc.initial[static_cast<std::size_t>(b)]);
  }
  const Polytope omega0 =
      convex_hull(PointSet(sc.dim, benign_initial), sc.tol_geom, sc.tol_vertex);
  Json hull = Json::array();
  for (const Point& v : omega0.vertices) hull.push_back(v);
  return Json{{"format_version", kFormatVersion},
              {"config", scenario_to_json(sc)},
              {"omega0_vertices", hull},
              {"roles", roles},
              {"agents", agents}};
}

inline Json audit_to_json(const AuditReport& report, const Scenario& sc) {
  auto status = [](CheckStatus st, const std::optional<std::size_t>& round) {
    Json j{{"status", st == CheckStatus::Pass     ? "pass"
                      : st == CheckStatus::Fail   ? "fail"
                                                  : "solver-failure"}};
    j["round"] = round ? Json(*round) : Json(nullptr);
    return j;
  };
  Json gamma(nullptr);
  if (report.gamma) {
    gamma = Json::object();
    for (const auto& [node, weight] : *report.gamma) gamma[std::to_string(node)] = weight;
  }
  return Json{{"format_version", kFormatVersion},
              {"config", scenario_to_json(sc)},
              {"validity", status(report.validity, report.validity_round)},
              {"nesting", status(report.nesting, report.nesting_round)},
              {"agreement",
               report.agreement == AgreementStatus::Pass ? "pass" : "not-applicable"},
              {"gamma", gamma},
              {"final_point", report.final_point},
              {"contraction", report.contraction},
              {"solver_errors", report.solver_errors},
              {"pass", report.all_pass()}};
}

inline Json robustness_report_to_json(const RobustnessReport& report, bool strict,
                                      std::size_t cap) {
  Json witness(nullptr);
  if (report.witness) {
    witness = Json::array({report.witness->first, report.witness->second});
  }
  return Json{{"r", report.r},
              {"s", report.s ? Json(*report.s) : Json(nullptr)},
              {"verdict", report.verdict},
              {"witness", witness},
              {"format_version", kFormatVersion},
              {"config", Json{{"strict", strict}, {"exhaustive_cap", cap}}}};
}

}  // namespace safekernel::io
