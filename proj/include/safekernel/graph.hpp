#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "safekernel/common.hpp"

namespace safekernel {

/// Undirected communication graph over nodes [0, N). No self-loops; the
/// edge set is symmetric by construction. Connectivity is not assumed here;
/// scenario validation checks it.
struct Network {
  std::size_t node_count = 0;
  std::vector<std::vector<int>> adjacency;  // sorted neighbor lists

  Network() = default;

  Network(std::size_t n, const std::vector<std::pair<int, int>>& edges)
      : node_count(n), adjacency(n) {
    for (const auto& [i, j] : edges) {
      if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n ||
          static_cast<std::size_t>(j) >= n) {
        throw std::invalid_argument("Network: edge endpoint out of range");
      }
      if (i == j) throw std::invalid_argument("Network: self-loop");
      adjacency[static_cast<std::size_t>(i)].push_back(j);
      adjacency[static_cast<std::size_t>(j)].push_back(i);
    }
    for (auto& nbrs : adjacency) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
  }

  std::size_t degree(int i) const {
    return adjacency[static_cast<std::size_t>(i)].size();
  }

  bool connected() const {
    if (node_count == 0) return false;
    std::vector<bool> seen(node_count, false);
    std::vector<int> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adjacency[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    return reached == node_count;
  }
};

/// Neighborhood N_i, excluding i itself.
inline const std::vector<int>& neighbors(const Network& g, int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= g.node_count) {
    throw std::invalid_argument("neighbors: unknown node id " + std::to_string(i));
  }
  return g.adjacency[static_cast<std::size_t>(i)];
}

enum class AttackModel { FTotal, FLocal };

/// The misbehaving set together with the bound F it is supposed to respect.
struct FaultSet {
  std::set<int> members;
  std::size_t bound = 0;
  AttackModel model = AttackModel::FTotal;
};

/// F-total: at most F faulty nodes in the whole network.
/// F-local: at most F faulty nodes in every benign node's neighborhood.
inline bool validate_fault_set(const Network& g, const FaultSet& fs) {
  for (int v : fs.members) {
    if (v < 0 || static_cast<std::size_t>(v) >= g.node_count) {
      throw std::invalid_argument("validate_fault_set: member out of range");
    }
  }
  if (fs.model == AttackModel::FTotal) return fs.members.size() <= fs.bound;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    if (fs.members.count(static_cast<int>(i))) continue;
    std::size_t faulty_nbrs = 0;
    for (int j : g.adjacency[i]) {
      if (fs.members.count(j)) ++faulty_nbrs;
    }
    if (faulty_nbrs > fs.bound) return false;
  }
  return true;
}

/// Per-node degree condition |N_i| >= (d+1)F + 1.
inline std::vector<bool> check_degree_assumption(const Network& g, std::size_t d,
                                                 std::size_t f) {
  std::vector<bool> ok(g.node_count);
  const std::size_t required = (d + 1) * f + 1;
  for (std::size_t i = 0; i < g.node_count; ++i) ok[i] = g.adjacency[i].size() >= required;
  return ok;
}

/// Robustness verdict plus, when false, a violating pair of disjoint
/// nonempty subsets that re-checking certifies.
struct RobustnessReport {
  std::size_t r = 0;
  std::optional<std::size_t> s;
  bool verdict = false;
  std::optional<std::pair<std::vector<int>, std::vector<int>>> witness;
};

namespace detail {

inline std::vector<std::uint32_t> adjacency_masks(const Network& g) {
  std::vector<std::uint32_t> masks(g.node_count, 0);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    for (int j : g.adjacency[i]) masks[i] |= std::uint32_t{1} << j;
  }
  return masks;
}

inline std::vector<int> mask_to_nodes(std::uint32_t mask) {
  std::vector<int> nodes;
  for (int v = 0; mask; ++v, mask >>= 1) {
    if (mask & 1) nodes.push_back(v);
  }
  return nodes;
}

// Visits every unordered pair of disjoint nonempty subsets of [0, n).
// Stops early once `visit` returns false; returns the surviving verdict.
template <typename Visitor>
inline bool scan_subset_pairs(std::size_t n, Visitor&& visit) {
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  for (std::uint32_t v1 = 1; v1 <= full; ++v1) {
    const std::uint32_t rest = full & ~v1;
    const std::uint32_t low1 = v1 & (~v1 + 1);
    for (std::uint32_t v2 = rest; v2; v2 = (v2 - 1) & rest) {
      // Unordered: count each pair once, keyed by lowest member.
      if ((v2 & (~v2 + 1)) < low1) continue;
      if (!visit(v1, v2)) return false;
    }
  }
  return true;
}

inline std::size_t count_with_outside_degree(const std::vector<std::uint32_t>& adj,
                                             std::uint32_t set, std::size_t r,
                                             std::size_t stop_at) {
  std::size_t count = 0;
  std::uint32_t rem = set;
  for (int v = 0; rem; ++v, rem >>= 1) {
    if (!(rem & 1)) continue;
    if (std::popcount(adj[static_cast<std::size_t>(v)] & ~set) >= static_cast<int>(r)) {
      if (++count >= stop_at) return count;
    }
  }
  return count;
}

inline void require_exhaustible(const Network& g, std::size_t cap) {
  if (g.node_count < 2) throw std::invalid_argument("robustness: need at least 2 nodes");
  if (g.node_count > std::min<std::size_t>(cap, 31)) {
    throw UnsupportedSizeError("robustness: exhaustive check capped at " +
                               std::to_string(std::min<std::size_t>(cap, 31)) +
                               " nodes, got " + std::to_string(g.node_count));
  }
}

}  // namespace detail

/// r-robustness: every pair of disjoint nonempty subsets has a node with at
/// least r neighbors outside its own set. `strict` switches to the literal
/// more-than-one-node reading, which no graph satisfies on singleton pairs;
/// the default is the standard at-least-one reading.
inline RobustnessReport is_r_robust(const Network& g, std::size_t r, bool strict = false,
                                    std::size_t exhaustive_cap = 12) {
  detail::require_exhaustible(g, exhaustive_cap);
  const auto adj = detail::adjacency_masks(g);
  const std::size_t need = strict ? 2 : 1;

  RobustnessReport report;
  report.r = r;
  report.verdict =
      detail::scan_subset_pairs(g.node_count, [&](std::uint32_t v1, std::uint32_t v2) {
        if (detail::count_with_outside_degree(adj, v1, r, need) >= need) return true;
        if (detail::count_with_outside_degree(adj, v2, r, need) >= need) return true;
        report.witness = {detail::mask_to_nodes(v1), detail::mask_to_nodes(v2)};
        return false;
      });
  return report;
}

/// (r,s)-robustness, the three-clause form: for every pair, either all of
/// V1 reaches outside with degree >= r, or all of V2 does, or at least s
/// nodes across both sets do.
inline RobustnessReport is_rs_robust(const Network& g, std::size_t r, std::size_t s,
                                     std::size_t exhaustive_cap = 12) {
  detail::require_exhaustible(g, exhaustive_cap);
  if (s < 1) throw std::invalid_argument("is_rs_robust: s must be >= 1");
  const auto adj = detail::adjacency_masks(g);

  RobustnessReport report;
  report.r = r;
  report.s = s;
  report.verdict =
      detail::scan_subset_pairs(g.node_count, [&](std::uint32_t v1, std::uint32_t v2) {
        const std::size_t n1 = static_cast<std::size_t>(std::popcount(v1));
        const std::size_t n2 = static_cast<std::size_t>(std::popcount(v2));
        const std::size_t c1 = detail::count_with_outside_degree(adj, v1, r, n1);
        if (c1 == n1) return true;
        const std::size_t c2 = detail::count_with_outside_degree(adj, v2, r, n2);
        if (c2 == n2) return true;
        if (c1 + c2 >= s) return true;
        report.witness = {detail::mask_to_nodes(v1), detail::mask_to_nodes(v2)};
        return false;
      });
  return report;
}

}  // namespace safekernel
