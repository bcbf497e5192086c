#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "safekernel/common.hpp"
#include "safekernel/geometry.hpp"
#include "safekernel/graph.hpp"
#include "safekernel/script.hpp"

namespace safekernel {

/// Convex update weights over the own state and the kernel vertices. Every
/// generated weight stays >= alpha > 0 and the full set is renormalized to
/// sum to one.
struct WeightPolicy {
  enum class Kind { Uniform, Custom };

  Kind kind = Kind::Uniform;
  double alpha = 1e-9;
  double self_weight = 0.0;  // Custom: own-state weight; vertices share the rest

  /// Resolves to (self weight, per-vertex weight) for a given vertex count.
  std::pair<double, double> weights(std::size_t vertex_count) const {
    if (vertex_count == 0) throw std::invalid_argument("WeightPolicy: no kernel vertices");
    double self = 0.0;
    double vertex = 0.0;
    if (kind == Kind::Uniform) {
      self = vertex = 1.0 / static_cast<double>(vertex_count + 1);
    } else {
      self = self_weight;
      vertex = (1.0 - self_weight) / static_cast<double>(vertex_count);
    }
    if (self < alpha || vertex < alpha) {
      throw ScenarioError("WeightPolicy: weight fell below alpha=" + std::to_string(alpha));
    }
    const double total = self + vertex * static_cast<double>(vertex_count);
    return {self / total, vertex / total};
  }
};

/// What a faulty node transmits. Scripted kinds are deterministic functions
/// of the round (and recipient); the random box is deterministic given the
/// scenario seed.
struct AdversaryStrategy {
  enum class Kind { Scripted, Constant, RandomBox, PerRecipientScripted };

  Kind kind = Kind::Constant;
  std::vector<script::Expr> scripts;                    // Scripted: one per coordinate
  Point constant;                                       // Constant
  Point box_lo, box_hi;                                 // RandomBox: per-recipient draws
  std::map<int, std::vector<script::Expr>> recipients;  // PerRecipientScripted

  /// Broadcast kinds send one value per round; the others may differ per
  /// recipient, and the node's logged state becomes the round's mean.
  bool broadcast() const { return kind == Kind::Scripted || kind == Kind::Constant; }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform draw in [0, 1) keyed by position in the run; independent of
// evaluation order, so trajectories are reproducible bit for bit.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t node, std::uint64_t round,
                            std::uint64_t recipient, std::uint64_t coord) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ node);
  h = splitmix64(h ^ round);
  h = splitmix64(h ^ recipient);
  h = splitmix64(h ^ coord);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Identifies the deterministic random stream of one faulty node.
struct RngStream {
  std::uint64_t seed = 0;
  int node = 0;
};

/// Value a faulty node sends to `recipient` at round k.
inline Point adversary_emit(const AdversaryStrategy& strategy, std::size_t k, int recipient,
                            const RngStream& rng) {
  const double kd = static_cast<double>(k);
  Point value;
  switch (strategy.kind) {
    case AdversaryStrategy::Kind::Scripted:
      value.reserve(strategy.scripts.size());
      for (const script::Expr& e : strategy.scripts) value.push_back(e.eval(kd));
      break;
    case AdversaryStrategy::Kind::Constant:
      value = strategy.constant;
      break;
    case AdversaryStrategy::Kind::RandomBox:
      value.resize(strategy.box_lo.size());
      for (std::size_t p = 0; p < value.size(); ++p) {
        const double u = detail::keyed_uniform(rng.seed, static_cast<std::uint64_t>(rng.node),
                                               k, static_cast<std::uint64_t>(recipient), p);
        value[p] = strategy.box_lo[p] + u * (strategy.box_hi[p] - strategy.box_lo[p]);
      }
      break;
    case AdversaryStrategy::Kind::PerRecipientScripted: {
      const auto it = strategy.recipients.find(recipient);
      if (it == strategy.recipients.end()) {
        throw ScenarioError("adversary_emit: no script for recipient " +
                            std::to_string(recipient));
      }
      value.reserve(it->second.size());
      for (const script::Expr& e : it->second) value.push_back(e.eval(kd));
      break;
    }
  }
  if (!is_finite(value)) {
    throw ScenarioError("adversary_emit: non-finite value from node " +
                        std::to_string(rng.node) + " at round " + std::to_string(k));
  }
  return value;
}

/// Full experiment description; validate() enforces every invariant the
/// simulation relies on before any round runs.
struct Scenario {
  Network network;
  std::size_t dim = 0;
  FaultSet faults;
  std::map<int, AdversaryStrategy> strategies;  // faulty node -> behaviour
  std::vector<Point> initial;                   // indexed by node id
  WeightPolicy weights;
  double epsilon = 1e-6;
  std::size_t max_rounds = 10000;
  std::uint64_t seed = 0;
  double tol_geom = kTolGeom;
  double tol_vertex = kTolVertex;

  bool is_faulty(int i) const { return faults.members.count(i) > 0; }

  std::vector<int> benign_nodes() const {
    std::vector<int> benign;
    for (std::size_t i = 0; i < network.node_count; ++i) {
      if (!is_faulty(static_cast<int>(i))) benign.push_back(static_cast<int>(i));
    }
    return benign;
  }

  void validate() const {
    if (network.node_count < 2) throw ScenarioError("scenario: need at least 2 nodes");
    if (dim < 1) throw ScenarioError("scenario: dim must be >= 1");
    if (!network.connected()) throw ScenarioError("scenario: graph is not connected");
    if (initial.size() != network.node_count) {
      throw ScenarioError("scenario: initial states must cover all nodes");
    }
    for (std::size_t i = 0; i < initial.size(); ++i) {
      if (initial[i].size() != dim) {
        throw ScenarioError("scenario: initial state of node " + std::to_string(i) +
                            " has wrong dimension");
      }
      if (!is_finite(initial[i])) {
        throw ScenarioError("scenario: non-finite initial state for node " +
                            std::to_string(i));
      }
    }
    if (!validate_fault_set(network, faults)) {
      throw ScenarioError("scenario: fault set violates its attack model");
    }
    if (faults.members.size() >= network.node_count) {
      throw ScenarioError("scenario: no benign agents left");
    }
    for (int f : faults.members) {
      if (!strategies.count(f)) {
        throw ScenarioError("scenario: faulty node " + std::to_string(f) +
                            " has no strategy");
      }
    }
    for (const auto& [node, strategy] : strategies) {
      if (!faults.members.count(node)) {
        throw ScenarioError("scenario: strategy given for benign node " +
                            std::to_string(node));
      }
      validate_strategy(node, strategy);
    }
    const std::size_t required = (dim + 1) * faults.bound + 1;
    for (int b : benign_nodes()) {
      if (network.degree(b) < required) {
        throw ScenarioError("scenario: node " + std::to_string(b) + " has degree " +
                            std::to_string(network.degree(b)) + ", needs >= " +
                            std::to_string(required));
      }
    }
    if (!(epsilon > 0.0)) throw ScenarioError("scenario: epsilon must be positive");
    if (max_rounds < 1) throw ScenarioError("scenario: max_rounds must be >= 1");
    if (!(weights.alpha > 0.0)) throw ScenarioError("scenario: alpha must be positive");
    if (weights.kind == WeightPolicy::Kind::Custom &&
        !(weights.self_weight > 0.0 && weights.self_weight < 1.0)) {
      throw ScenarioError("scenario: custom self weight must lie in (0, 1)");
    }
  }

 private:
  void validate_strategy(int node, const AdversaryStrategy& s) const {
    const std::string who = "scenario: strategy of node " + std::to_string(node);
    switch (s.kind) {
      case AdversaryStrategy::Kind::Scripted:
        if (s.scripts.size() != dim) throw ScenarioError(who + ": expected " +
                                                         std::to_string(dim) + " scripts");
        break;
      case AdversaryStrategy::Kind::Constant:
        if (s.constant.size() != dim || !is_finite(s.constant)) {
          throw ScenarioError(who + ": constant must be a finite point of dimension " +
                              std::to_string(dim));
        }
        break;
      case AdversaryStrategy::Kind::RandomBox:
        if (s.box_lo.size() != dim || s.box_hi.size() != dim || !is_finite(s.box_lo) ||
            !is_finite(s.box_hi)) {
          throw ScenarioError(who + ": box bounds must be finite points of dimension " +
                              std::to_string(dim));
        }
        for (std::size_t p = 0; p < dim; ++p) {
          if (s.box_lo[p] > s.box_hi[p]) throw ScenarioError(who + ": box has lo > hi");
        }
        break;
      case AdversaryStrategy::Kind::PerRecipientScripted:
        for (int j : neighbors(network, node)) {
          const auto it = s.recipients.find(j);
          if (it == s.recipients.end()) {
            throw ScenarioError(who + ": missing scripts for neighbor " + std::to_string(j));
          }
          if (it->second.size() != dim) {
            throw ScenarioError(who + ": recipient " + std::to_string(j) + " needs " +
                                std::to_string(dim) + " scripts");
          }
        }
        for (const auto& [recipient, scripts] : s.recipients) {
          const auto& nbrs = neighbors(network, node);
          if (!std::binary_search(nbrs.begin(), nbrs.end(), recipient)) {
            throw ScenarioError(who + ": recipient " + std::to_string(recipient) +
                                " is not a neighbor");
          }
        }
        break;
    }
  }
};

/// Per-round record: every agent's state, kernel sizes seen by benign
/// agents during the update into this round, and the benign diameter.
struct RoundRecord {
  std::size_t round = 0;
  std::vector<Point> states;
  std::map<int, std::size_t> kernel_vertex_counts;
  double benign_diameter = 0.0;
};

enum class Terminal { Converged, RoundLimit };

struct Trajectory {
  std::vector<RoundRecord> rounds;
  Terminal terminal = Terminal::RoundLimit;
};

/// Max pairwise Euclidean distance; 0 for a singleton.
inline double diameter(const std::vector<Point>& states) {
  if (states.empty()) throw std::invalid_argument("diameter: empty state set");
  double best = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      best = std::max(best, distance(states[i], states[j]));
    }
  }
  return best;
}

/// One resilient update: move to a convex combination of the own state and
/// the vertices of the safe kernel of the received neighbor values.
inline Point benign_update(const Point& own, const PointSet& neighbor_values,
                           std::size_t fault_bound, const WeightPolicy& policy,
                           double tol_geom = kTolGeom, double tol_vertex = kTolVertex,
                           std::size_t* kernel_vertex_count = nullptr) {
  const std::size_t d = own.size();
  if (neighbor_values.dim != d) {
    throw std::invalid_argument("benign_update: dimension mismatch");
  }
  if (neighbor_values.size() < (d + 1) * fault_bound + 1) {
    throw std::invalid_argument("benign_update: need at least (d+1)F+1 neighbor values");
  }

  const Polytope kernel = safe_kernel(neighbor_values, fault_bound, tol_geom, tol_vertex);
  if (kernel.empty) {
    throw DegenerateKernelError(
        "benign_update: numerically empty kernel (m=" +
        std::to_string(neighbor_values.size()) + ", F=" + std::to_string(fault_bound) +
        ", d=" + std::to_string(d) + "); check tolerance configuration");
  }
  if (kernel_vertex_count != nullptr) *kernel_vertex_count = kernel.vertices.size();

  const auto [self_w, vertex_w] = policy.weights(kernel.vertices.size());
  Point next = scaled(own, self_w);
  for (const Point& v : kernel.vertices) add_scaled_inplace(next, v, vertex_w);
  return next;
}

/// Synchronous round: all round-k messages are fixed before any update
/// applies. Benign nodes run the kernel update on the values they received;
/// a faulty node's stored state becomes its broadcast value, or the mean of
/// its per-recipient emissions (logging convention only).
inline std::vector<Point> run_round(const Scenario& sc, const std::vector<Point>& states,
                                    std::size_t k,
                                    std::map<int, std::size_t>* kernel_counts = nullptr) {
  std::map<int, std::map<int, Point>> faulty_messages;
  for (int f : sc.faults.members) {
    const RngStream rng{sc.seed, f};
    std::map<int, Point> per_recipient;
    for (int j : neighbors(sc.network, f)) {
      per_recipient.emplace(j, adversary_emit(sc.strategies.at(f), k, j, rng));
    }
    faulty_messages.emplace(f, std::move(per_recipient));
  }

  std::vector<Point> next = states;
  for (int i : sc.benign_nodes()) {
    std::vector<Point> received;
    received.reserve(sc.network.degree(i));
    for (int j : neighbors(sc.network, i)) {
      if (sc.is_faulty(j)) {
        received.push_back(faulty_messages.at(j).at(i));
      } else {
        received.push_back(states[static_cast<std::size_t>(j)]);
      }
    }
    try {
      std::size_t count = 0;
      next[static_cast<std::size_t>(i)] =
          benign_update(states[static_cast<std::size_t>(i)], PointSet(sc.dim, received),
                        sc.faults.bound, sc.weights, sc.tol_geom, sc.tol_vertex, &count);
      if (kernel_counts != nullptr) (*kernel_counts)[i] = count;
    } catch (const DegenerateKernelError& err) {
      throw DegenerateKernelError("node " + std::to_string(i) + ", round " +
                                  std::to_string(k) + ": " + err.what());
    }
  }

  for (int f : sc.faults.members) {
    const auto& sent = faulty_messages.at(f);
    if (sent.empty()) continue;  // isolated faulty node: nothing was emitted
    if (sc.strategies.at(f).broadcast()) {
      next[static_cast<std::size_t>(f)] = sent.begin()->second;
    } else {
      Point mean(sc.dim, 0.0);
      for (const auto& [recipient, value] : sent) {
        add_scaled_inplace(mean, value, 1.0 / static_cast<double>(sent.size()));
      }
      next[static_cast<std::size_t>(f)] = std::move(mean);
    }
  }
  return next;
}

/// Runs the protocol until the benign diameter drops below epsilon or the
/// round limit is hit. Output is bit-identical for identical scenario+seed.
inline Trajectory simulate(const Scenario& sc) {
  sc.validate();

  const std::vector<int> benign = sc.benign_nodes();
  auto benign_states = [&](const std::vector<Point>& states) {
    std::vector<Point> out;
    out.reserve(benign.size());
    for (int b : benign) out.push_back(states[static_cast<std::size_t>(b)]);
    return out;
  };

  Trajectory traj;
  std::vector<Point> states = sc.initial;
  double diam = diameter(benign_states(states));
  traj.rounds.push_back({0, states, {}, diam});
  if (diam < sc.epsilon) {
    traj.terminal = Terminal::Converged;
    return traj;
  }

  for (std::size_t k = 0; k < sc.max_rounds; ++k) {
    std::map<int, std::size_t> counts;
    states = run_round(sc, states, k, &counts);
    diam = diameter(benign_states(states));
    traj.rounds.push_back({k + 1, states, std::move(counts), diam});
    if (diam < sc.epsilon) {
      traj.terminal = Terminal::Converged;
      return traj;
    }
  }
  traj.terminal = Terminal::RoundLimit;
  return traj;
}

}  // namespace safekernel
