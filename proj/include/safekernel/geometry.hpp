#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "safekernel/common.hpp"

namespace safekernel {

/// A multiset of points in R^d. Duplicates are permitted and count toward
/// the cardinality; subset enumeration treats them as distinct slots.
struct PointSet {
  std::size_t dim = 0;
  std::vector<Point> points;

  PointSet() = default;

  PointSet(std::size_t d, std::vector<Point> pts) : dim(d), points(std::move(pts)) {
    check();
  }

  explicit PointSet(std::vector<Point> pts) : points(std::move(pts)) {
    if (points.empty()) {
      throw std::invalid_argument("PointSet: cannot infer dimension from an empty list");
    }
    dim = points.front().size();
    check();
  }

  std::size_t size() const { return points.size(); }

 private:
  void check() const {
    if (dim < 1) throw std::invalid_argument("PointSet: dimension must be >= 1");
    for (const Point& p : points) {
      if (p.size() != dim) throw std::invalid_argument("PointSet: inconsistent point dimension");
      if (!is_finite(p)) throw std::invalid_argument("PointSet: non-finite coordinate");
    }
  }
};

/// Closed halfspace {x : normal . x <= offset} with |normal| = 1.
struct Halfspace {
  Point normal;
  double offset = 0.0;
};

/// Dual-representation convex body: vertex list plus bounding halfspaces.
/// Lower-dimensional bodies carry a pair of opposing halfspaces pinning each
/// deficient direction, so the H-rep always describes the exact set.
struct Polytope {
  std::size_t dim = 0;
  bool empty = true;
  bool lower_dimensional = false;
  std::vector<Point> vertices;    // sorted lexicographically
  std::vector<Halfspace> halfspaces;
};

namespace detail {

// Greedy modified Gram-Schmidt with re-orthogonalization. Returns an
// orthonormal basis of span{vecs}; a residual is absorbed once its norm
// falls to `tol`. Deterministic: the largest residual (first on ties) is
// picked at every step. The second projection pass matters: nearly
// dependent inputs cancel catastrophically and a single pass can leave the
// new direction skewed by far more than machine precision.
inline std::vector<Point> orthonormal_basis(std::vector<Point> residuals, double tol) {
  std::vector<Point> basis;
  if (residuals.empty()) return basis;
  const std::size_t dim = residuals.front().size();
  while (basis.size() < dim) {
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      const double ni = norm(residuals[i]);
      if (ni > best_norm) {
        best_norm = ni;
        best = i;
      }
    }
    if (best_norm <= tol) break;
    Point u = residuals[best];
    for (const Point& v : basis) add_scaled_inplace(u, v, -dot(u, v));
    const double refreshed = norm(u);
    if (refreshed <= tol) {
      residuals[best] = std::move(u);  // was in the span after all
      continue;
    }
    u = scaled(u, 1.0 / refreshed);
    for (Point& r : residuals) add_scaled_inplace(r, u, -dot(r, u));
    basis.push_back(std::move(u));
  }
  return basis;
}

inline std::size_t rank_of(const std::vector<Point>& vecs, double tol) {
  return orthonormal_basis(vecs, tol).size();
}

// Completes an orthonormal set `basis` to a full basis of R^dim using
// canonical directions; returns only the new (complementary) vectors.
inline std::vector<Point> complement_basis(const std::vector<Point>& basis, std::size_t dim) {
  std::vector<Point> complement;
  for (std::size_t p = 0; p < dim; ++p) {
    Point r(dim, 0.0);
    r[p] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Point& u : basis) add_scaled_inplace(r, u, -dot(r, u));
      for (const Point& w : complement) add_scaled_inplace(r, w, -dot(r, w));
    }
    const double n = norm(r);
    if (n > 1e-6) complement.push_back(scaled(r, 1.0 / n));
  }
  return complement;
}

inline bool halfspace_close(const Halfspace& a, const Halfspace& b, double tol) {
  return points_equal(a.normal, b.normal, tol) &&
         std::abs(a.offset - b.offset) <= tol * (1.0 + std::abs(a.offset));
}

inline void append_halfspace_dedup(std::vector<Halfspace>& hs, Halfspace h, double tol) {
  for (const Halfspace& e : hs) {
    if (halfspace_close(e, h, tol)) return;
  }
  hs.push_back(std::move(h));
}

inline void sort_halfspaces(std::vector<Halfspace>& hs) {
  std::sort(hs.begin(), hs.end(), [](const Halfspace& a, const Halfspace& b) {
    if (a.normal != b.normal) return lex_less(a.normal, b.normal);
    return a.offset < b.offset;
  });
}

inline std::vector<Point> dedup_points(const std::vector<Point>& pts, double tol) {
  std::vector<Point> out;
  for (const Point& p : pts) {
    bool dup = false;
    for (const Point& q : out) {
      if (points_equal(p, q, tol)) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p);
  }
  return out;
}

// Solves the dim x dim system packed row-major into `aug` (dim+1 columns,
// last one the rhs) in place. False when a pivot degenerates.
inline bool solve_augmented(std::vector<double>& aug, std::size_t dim, Point& out,
                            double min_pivot = 1e-12) {
  const std::size_t w = dim + 1;
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < dim; ++r) {
      if (std::abs(aug[r * w + col]) > std::abs(aug[piv * w + col])) piv = r;
    }
    if (std::abs(aug[piv * w + col]) <= min_pivot) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < w; ++c) std::swap(aug[piv * w + c], aug[col * w + c]);
    }
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = aug[r * w + col] / aug[col * w + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < w; ++c) aug[r * w + c] -= f * aug[col * w + c];
    }
  }
  out.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = aug[i * w + dim] / aug[i * w + i];
  return true;
}

// All vertices of the (bounded) region {x : h.normal . x <= h.offset} as
// intersections of d constraint boundaries that satisfy every constraint.
inline std::vector<Point> enumerate_region_vertices(const std::vector<Halfspace>& hs,
                                                    std::size_t dim, double tol_geom,
                                                    double tol_vertex) {
  std::vector<Point> found;
  std::vector<double> aug((dim + 1) * dim);
  Point x;
  for_each_combination(hs.size(), dim, [&](const std::vector<std::size_t>& idx) {
    for (std::size_t i = 0; i < dim; ++i) {
      const Halfspace& h = hs[idx[i]];
      for (std::size_t c = 0; c < dim; ++c) aug[i * (dim + 1) + c] = h.normal[c];
      aug[i * (dim + 1) + dim] = h.offset;
    }
    if (!solve_augmented(aug, dim, x)) return;
    for (const Halfspace& h : hs) {
      if (dot(h.normal, x) > h.offset + tol_geom * (1.0 + std::abs(h.offset))) return;
    }
    found.push_back(x);
  });
  std::sort(found.begin(), found.end(), lex_less);
  std::vector<Point> vertices;
  for (const Point& p : found) {
    bool dup = false;
    for (const Point& q : vertices) {
      if (points_equal(p, q, tol_vertex)) {
        dup = true;
        break;
      }
    }
    if (!dup) vertices.push_back(p);
  }
  return vertices;
}

// True when {x : h.normal . x <= h.offset} has an empty recession cone.
// Unbounded iff the normals do not span R^d (a free line exists) or some
// extreme ray, pinned by d-1 independent boundaries, satisfies every
// constraint.
inline bool region_bounded(const std::vector<Halfspace>& hs, std::size_t dim, double tol) {
  std::vector<Point> normals;
  normals.reserve(hs.size());
  for (const Halfspace& h : hs) normals.push_back(h.normal);
  if (rank_of(normals, 1e-9) < dim) return false;

  auto recession_dir = [&](const Point& w) {
    for (const Halfspace& h : hs) {
      if (dot(h.normal, w) > tol) return false;
    }
    return true;
  };

  bool unbounded = false;
  for_each_combination(hs.size(), dim - 1, [&](const std::vector<std::size_t>& idx) {
    if (unbounded) return;
    std::vector<Point> rows;
    rows.reserve(dim - 1);
    for (std::size_t i : idx) rows.push_back(hs[i].normal);
    const auto basis = orthonormal_basis(rows, 1e-9);
    if (basis.size() != dim - 1) return;
    for (const Point& w : complement_basis(basis, dim)) {
      if (recession_dir(w) || recession_dir(scaled(w, -1.0))) {
        unbounded = true;
        return;
      }
    }
  });
  return !unbounded;
}

}  // namespace detail

/// All subsets of `a` with cardinality |a| - n, in lexicographic slot order.
/// Duplicate points occupy distinct slots.
inline std::vector<PointSet> enumerate_subsets(const PointSet& a, std::size_t n) {
  const std::size_t m = a.size();
  if (n > m) throw std::invalid_argument("enumerate_subsets: n exceeds cardinality");
  std::vector<PointSet> subsets;
  detail::for_each_combination(m, m - n, [&](const std::vector<std::size_t>& keep) {
    std::vector<Point> pts;
    pts.reserve(keep.size());
    for (std::size_t i : keep) pts.push_back(a.points[i]);
    subsets.push_back(PointSet(a.dim, std::move(pts)));
  });
  return subsets;
}

/// Sufficient cardinality condition for a nonempty kernel: m >= n(d+1)+1.
/// A false return does not imply emptiness.
inline bool kernel_guaranteed_nonempty(std::size_t m, std::size_t n, std::size_t d) {
  return m >= n * (d + 1) + 1;
}

/// Membership in the H-representation: every halfspace satisfied within tol.
/// Empty polytopes contain nothing.
inline bool contains(const Polytope& p, const Point& y, double tol) {
  if (y.size() != p.dim) throw std::invalid_argument("contains: dimension mismatch");
  if (p.empty) return false;
  for (const Halfspace& h : p.halfspaces) {
    if (dot(h.normal, y) > h.offset + tol) return false;
  }
  return true;
}

/// Convex hull of a nonempty point multiset, as vertex list plus halfspaces.
///
/// Candidate facets come from every d-point affinely independent subset and
/// survive when all points lie weakly on one side. Rank-deficient inputs are
/// handled by projecting onto the affine hull, building the hull there, and
/// pinning each deficient direction with an opposing halfspace pair.
inline Polytope convex_hull(const PointSet& s, double tol_geom = kTolGeom,
                            double tol_vertex = kTolVertex) {
  if (s.points.empty()) throw std::invalid_argument("convex_hull: empty input");
  const std::size_t d = s.dim;

  const std::vector<Point> pts = detail::dedup_points(s.points, tol_vertex);
  const Point& base = pts.front();

  std::vector<Point> diffs;
  diffs.reserve(pts.size() - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) diffs.push_back(sub(pts[i], base));
  const std::vector<Point> axes = detail::orthonormal_basis(diffs, tol_geom);
  const std::size_t r = axes.size();

  Polytope poly;
  poly.dim = d;
  poly.empty = false;
  poly.lower_dimensional = r < d;

  if (r == 0) {
    poly.vertices.push_back(base);
  } else {
    // Work in affine-hull coordinates q_i = axes^T (p_i - base).
    std::vector<Point> q(pts.size(), Point(r, 0.0));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point diff = sub(pts[i], base);
      for (std::size_t t = 0; t < r; ++t) q[i][t] = dot(axes[t], diff);
    }

    std::vector<Halfspace> facets;
    detail::for_each_combination(pts.size(), r, [&](const std::vector<std::size_t>& idx) {
      std::vector<Point> rows;
      rows.reserve(r - 1);
      for (std::size_t j = 1; j < r; ++j) rows.push_back(sub(q[idx[j]], q[idx[0]]));
      double scale = 1.0;
      for (const Point& row : rows) scale = std::max(scale, norm(row));
      const auto span = detail::orthonormal_basis(rows, 1e-12 * scale);
      if (span.size() + 1 != r) return;  // affinely dependent candidate
      const auto normals = detail::complement_basis(span, r);
      if (normals.size() != 1) return;
      const Point& a = normals.front();
      const double b = dot(a, q[idx[0]]);
      double smax = 0.0;
      double smin = 0.0;
      for (const Point& qq : q) {
        const double side = dot(a, qq) - b;
        smax = std::max(smax, side);
        smin = std::min(smin, side);
      }
      if (smax <= tol_geom) detail::append_halfspace_dedup(facets, {a, b}, tol_geom);
      if (smin >= -tol_geom) {
        detail::append_halfspace_dedup(facets, {scaled(a, -1.0), -b}, tol_geom);
      }
    });

    // A point is extreme iff its active facet normals span the hull space.
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::vector<Point> active;
      for (const Halfspace& f : facets) {
        if (std::abs(dot(f.normal, q[i]) - f.offset) <=
            tol_geom * (1.0 + std::abs(f.offset))) {
          active.push_back(f.normal);
        }
      }
      if (active.size() >= r && detail::rank_of(active, 1e-9) == r) {
        poly.vertices.push_back(pts[i]);
      }
    }

    // Lift facets back to ambient coordinates.
    for (const Halfspace& f : facets) {
      Point ambient(d, 0.0);
      for (std::size_t t = 0; t < r; ++t) add_scaled_inplace(ambient, axes[t], f.normal[t]);
      const double n = norm(ambient);
      const Halfspace lifted{scaled(ambient, 1.0 / n), f.offset / n + dot(ambient, base) / n};
      detail::append_halfspace_dedup(poly.halfspaces, lifted, tol_geom);
    }
  }

  // Pin every deficient direction with an opposing pair.
  for (const Point& w : detail::complement_basis(axes, d)) {
    const double c = dot(w, base);
    detail::append_halfspace_dedup(poly.halfspaces, {w, c}, tol_geom);
    detail::append_halfspace_dedup(poly.halfspaces, {scaled(w, -1.0), -c}, tol_geom);
  }

  std::sort(poly.vertices.begin(), poly.vertices.end(), lex_less);
  detail::sort_halfspaces(poly.halfspaces);
  return poly;
}

/// The safe kernel Psi(A, n): intersection of the convex hulls of all
/// subsets of A with n elements removed. Possibly empty, possibly
/// lower-dimensional, possibly a single point.
///
/// H-rep is the union of all subset-hull constraints (redundant ones
/// pruned); vertices are enumerated from d-fold boundary intersections that
/// satisfy every constraint, then deduplicated.
inline Polytope safe_kernel(const PointSet& a, std::size_t n, double tol_geom = kTolGeom,
                            double tol_vertex = kTolVertex) {
  const std::size_t m = a.size();
  if (n > m) throw std::invalid_argument("safe_kernel: n exceeds cardinality");
  const std::size_t d = a.dim;

  Polytope kernel;
  kernel.dim = d;
  if (m == n) return kernel;  // hull of the empty subset: empty kernel

  // Snap near-coincident inputs to one shared representative so every subset
  // hull sees identical coordinates; per-subset dedup alone would pick
  // different representatives and leave no point satisfying all constraints
  // at tol_geom once states cluster below tol_vertex.
  std::vector<Point> canonical;
  canonical.reserve(m);
  std::vector<Point> canonical_inputs;  // distinct representatives
  for (const Point& p : a.points) {
    std::size_t rep = canonical_inputs.size();
    for (std::size_t i = 0; i < canonical_inputs.size(); ++i) {
      if (points_equal(p, canonical_inputs[i], tol_vertex)) {
        rep = i;
        break;
      }
    }
    if (rep == canonical_inputs.size()) canonical_inputs.push_back(p);
    canonical.push_back(canonical_inputs[rep]);
  }

  std::vector<Halfspace> constraints;
  for (const PointSet& s : enumerate_subsets(PointSet(d, std::move(canonical)), n)) {
    const Polytope hull = convex_hull(s, tol_geom, tol_vertex);
    for (const Halfspace& h : hull.halfspaces) {
      detail::append_halfspace_dedup(constraints, h, tol_geom);
    }
  }

  std::vector<Point> vertices =
      detail::enumerate_region_vertices(constraints, d, tol_geom, tol_vertex);
  if (vertices.empty()) return kernel;  // numerically infeasible system

  // Snap solver output onto coincident input points and scrub signed zeros,
  // so e.g. the n=0 kernel reproduces the hull vertices exactly.
  for (Point& v : vertices) {
    for (const Point& p : canonical_inputs) {
      if (points_equal(v, p, tol_vertex)) {
        v = p;
        break;
      }
    }
    for (double& c : v) c += 0.0;
  }
  std::sort(vertices.begin(), vertices.end(), lex_less);
  vertices = detail::dedup_points(vertices, tol_vertex);

  std::vector<Point> spread;
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    spread.push_back(sub(vertices[i], vertices.front()));
  }
  const std::size_t kernel_rank = detail::rank_of(spread, tol_geom);

  // Prune redundant constraints: a drop must leave the vertex set unchanged.
  // Constraints slack at every vertex always qualify (the region is bounded).
  auto active_vertices = [&](const Halfspace& h) {
    std::vector<Point> on;
    for (const Point& v : vertices) {
      if (std::abs(dot(h.normal, v) - h.offset) <= tol_geom * (1.0 + std::abs(h.offset))) {
        on.push_back(v);
      }
    }
    return on;
  };
  std::vector<Halfspace> kept;
  if (kernel_rank == d) {
    // Full-dimensional: exactly the facet-defining constraints remain, i.e.
    // those whose active vertices span a (d-1)-face.
    for (const Halfspace& h : constraints) {
      const std::vector<Point> on = active_vertices(h);
      if (on.empty()) continue;
      std::vector<Point> diffs;
      for (std::size_t i = 1; i < on.size(); ++i) diffs.push_back(sub(on[i], on.front()));
      if (d == 1 || detail::rank_of(diffs, tol_geom) >= d - 1) kept.push_back(h);
    }
  } else {
    // Lower-dimensional: drop slack constraints, then test the active ones
    // one at a time; a drop must also keep the region bounded.
    for (const Halfspace& h : constraints) {
      if (!active_vertices(h).empty()) kept.push_back(h);
    }
    auto same_vertex_set = [&](const std::vector<Point>& other) {
      if (other.size() != vertices.size()) return false;
      for (std::size_t i = 0; i < other.size(); ++i) {
        if (!points_equal(other[i], vertices[i], tol_vertex)) return false;
      }
      return true;
    };
    for (std::size_t i = 0; i < kept.size();) {
      std::vector<Halfspace> without = kept;
      without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
      if (without.size() >= d && detail::region_bounded(without, d, tol_geom) &&
          same_vertex_set(
              detail::enumerate_region_vertices(without, d, tol_geom, tol_vertex))) {
        kept = std::move(without);
      } else {
        ++i;
      }
    }
  }

  kernel.empty = false;
  kernel.vertices = std::move(vertices);
  kernel.halfspaces = std::move(kept);
  detail::sort_halfspaces(kernel.halfspaces);
  kernel.lower_dimensional = kernel_rank < d;
  return kernel;
}

/// Axis-aligned box whose p-th interval spans the (n+1)-th smallest to the
/// (n+1)-th largest p-th coordinate of A. Outer bound for safe_kernel(A, n).
inline Polytope trimmed_box(const PointSet& a, std::size_t n, double tol_vertex = kTolVertex) {
  const std::size_t m = a.size();
  if (m < 2 * n + 1) throw std::invalid_argument("trimmed_box: need at least 2n+1 points");
  const std::size_t d = a.dim;

  std::vector<double> lo(d), hi(d);
  std::vector<double> coord(m);
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t i = 0; i < m; ++i) coord[i] = a.points[i][p];
    std::sort(coord.begin(), coord.end());
    lo[p] = coord[n];
    hi[p] = coord[m - 1 - n];
  }

  Polytope box;
  box.dim = d;
  box.empty = false;
  for (std::size_t p = 0; p < d; ++p) {
    Point e(d, 0.0);
    e[p] = 1.0;
    box.halfspaces.push_back({e, hi[p]});
    box.halfspaces.push_back({scaled(e, -1.0), -lo[p]});
    if (hi[p] - lo[p] <= tol_vertex) box.lower_dimensional = true;
  }
  detail::sort_halfspaces(box.halfspaces);

  std::vector<Point> corners;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Point c(d);
    for (std::size_t p = 0; p < d; ++p) c[p] = (mask >> p) & 1 ? hi[p] : lo[p];
    corners.push_back(std::move(c));
  }
  std::sort(corners.begin(), corners.end(), lex_less);
  box.vertices = detail::dedup_points(corners, tol_vertex);
  return box;
}

}  // namespace safekernel
