#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace safekernel {

/// A point in R^d: one opinion/state vector. Coordinates must stay finite.
using Point = std::vector<double>;

// Default tolerances. All of them are configurable at the call sites that
// accept them; these are the values used when nothing else is specified.
inline constexpr double kTolGeom = 1e-9;    // halfspace satisfaction, side tests
inline constexpr double kTolVertex = 1e-7;  // vertex dedup
inline constexpr double kTolLp = 1e-8;      // feasibility oracle

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Scenario/graph level misconfiguration (invalid fault set, degree
/// assumption violated, bad adversary script, ...).
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The LP oracle exceeded its pivot budget. Distinct from "not a member".
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A kernel came out numerically empty although the cardinality condition
/// held. Signals tolerance misconfiguration, never silently recovered.
class DegenerateKernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive robustness checking requested beyond the configured cap.
class UnsupportedSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON, CSV, point list) or adversary script text.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

inline bool is_finite(const Point& p) {
  for (double c : p) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Point sub(const Point& a, const Point& b) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Point add(const Point& a, const Point& b) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Point scaled(const Point& a, double s) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

inline void add_scaled_inplace(Point& acc, const Point& a, double s) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a[i] * s;
}

/// Coordinate-wise equality within tol (L-infinity metric).
inline bool points_equal(const Point& a, const Point& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

/// Lexicographic coordinate order; used to make every vertex list diffable.
inline bool lex_less(const Point& a, const Point& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

namespace detail {

/// Visits every k-combination of {0,...,n-1} in lexicographic order.
template <typename Visitor>
inline void for_each_combination(std::size_t n, std::size_t k, Visitor&& visit) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(const_cast<const std::vector<std::size_t>&>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

}  // namespace safekernel
