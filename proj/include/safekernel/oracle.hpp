#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "safekernel/common.hpp"
#include "safekernel/engine.hpp"

// Slow, independent verification paths. Hull membership is decided by linear
// feasibility with an in-repo dense two-phase simplex, deliberately sharing
// no code with the halfspace machinery it cross-checks.

namespace safekernel {

/// Convex-combination weights witnessing y in Conv(points): lambda >= 0,
/// sum lambda = 1, sum lambda_j x_j = y, all within the solver tolerance.
struct MembershipCertificate {
  std::vector<double> lambdas;  // one weight per generating point
};

namespace lp {

// min c.x  s.t.  A x = b, x >= 0, solved on a dense tableau with Bland's
// rule. Phase 1 drives artificial variables to zero; a positive residual
// means infeasible. Returns nullopt on infeasibility; throws SolverFailure
// when the pivot budget runs out.
inline std::optional<std::vector<double>> simplex_equality(
    std::vector<std::vector<double>> a, std::vector<double> b, const std::vector<double>& c,
    double feas_tol, std::size_t max_pivots = 20000) {
  const std::size_t init_rows = a.size();
  const std::size_t n = init_rows == 0 ? 0 : a.front().size();
  constexpr double kPivotTol = 1e-11;

  for (std::size_t i = 0; i < init_rows; ++i) {
    if (b[i] < 0.0) {
      b[i] = -b[i];
      for (double& v : a[i]) v = -v;
    }
  }

  // Tableau columns: n structural, one artificial per row, then rhs.
  const std::size_t cols = n + init_rows + 1;
  std::vector<std::vector<double>> t(init_rows, std::vector<double>(cols, 0.0));
  std::vector<std::size_t> basis(init_rows);
  for (std::size_t i = 0; i < init_rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1.0;
    t[i][cols - 1] = b[i];
    basis[i] = n + i;
  }

  std::size_t pivots = 0;
  auto pivot_on = [&](std::size_t row, std::size_t col) {
    const double p = t[row][col];
    for (double& v : t[row]) v /= p;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == row) continue;
      const double f = t[i][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) t[i][j] -= f * t[row][j];
    }
    basis[row] = col;
    if (++pivots > max_pivots) {
      throw SolverFailure("simplex: pivot budget exhausted");
    }
  };

  // Reduced costs for the objective `obj` (indexed over all columns).
  auto run_phase = [&](const std::vector<double>& obj, bool allow_artificial) {
    while (true) {
      const std::size_t rows = t.size();
      std::vector<double> y(rows);  // multipliers: obj restricted to basis
      for (std::size_t i = 0; i < rows; ++i) y[i] = obj[basis[i]];
      std::size_t enter = cols;  // Bland: smallest eligible index
      const std::size_t limit = allow_artificial ? n + init_rows : n;
      for (std::size_t j = 0; j < limit; ++j) {
        double reduced = obj[j];
        for (std::size_t i = 0; i < rows; ++i) reduced -= y[i] * t[i][j];
        if (reduced < -kPivotTol) {
          enter = j;
          break;
        }
      }
      if (enter == cols) return;  // optimal
      std::size_t leave = rows;
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        if (t[i][enter] > kPivotTol) {
          const double ratio = t[i][cols - 1] / t[i][enter];
          if (leave == rows || ratio < best_ratio - 1e-15 ||
              (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave == rows) {
        throw SolverFailure("simplex: unbounded phase objective");
      }
      pivot_on(leave, enter);
    }
  };

  std::vector<double> phase1(cols - 1, 0.0);
  for (std::size_t j = n; j < n + init_rows; ++j) phase1[j] = 1.0;
  run_phase(phase1, true);

  double infeasibility = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (basis[i] >= n) infeasibility += t[i][cols - 1];
  }
  if (infeasibility > feas_tol) return std::nullopt;

  // Drive leftover artificials out of the basis; rows that cannot pivot on
  // any structural column are redundant and get deleted, so phase 2 starts
  // from a purely structural basis.
  for (std::size_t i = t.size(); i-- > 0;) {
    if (basis[i] < n) continue;
    bool driven = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(t[i][j]) > kPivotTol) {
        pivot_on(i, j);
        driven = true;
        break;
      }
    }
    if (!driven) {
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
      basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }

  std::vector<double> phase2(cols - 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
  run_phase(phase2, false);

  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (basis[i] < n) x[basis[i]] = t[i][cols - 1];
  }
  return x;
}

}  // namespace lp

/// Decides y in Conv(points) by linear feasibility. Returns the certificate
/// when a convex combination within tol exists, absent otherwise.
inline std::optional<MembershipCertificate> hull_membership(const PointSet& points,
                                                            const Point& y,
                                                            double tol = kTolLp) {
  if (points.points.empty()) throw std::invalid_argument("hull_membership: empty point set");
  if (y.size() != points.dim) {
    throw std::invalid_argument("hull_membership: dimension mismatch");
  }
  const std::size_t m = points.size();
  const std::size_t d = points.dim;

  std::vector<std::vector<double>> a(d + 1, std::vector<double>(m));
  std::vector<double> b(d + 1);
  for (std::size_t row = 0; row < d; ++row) {
    for (std::size_t j = 0; j < m; ++j) a[row][j] = points.points[j][row];
    b[row] = y[row];
  }
  for (std::size_t j = 0; j < m; ++j) a[d][j] = 1.0;
  b[d] = 1.0;

  auto solution = lp::simplex_equality(std::move(a), std::move(b),
                                       std::vector<double>(m, 0.0), tol);
  if (!solution) return std::nullopt;
  return MembershipCertificate{std::move(*solution)};
}

/// Definition-level kernel membership: y must lie in the hull of every
/// subset with n elements removed. Never touches the halfspace machinery.
inline bool kernel_membership_bruteforce(const PointSet& a, std::size_t n, const Point& y,
                                         double tol = kTolLp) {
  const std::size_t m = a.size();
  if (n > m) throw std::invalid_argument("kernel_membership_bruteforce: n exceeds cardinality");
  if (m == n) return false;  // hull of the empty subset
  bool member = true;
  detail::for_each_combination(m, m - n, [&](const std::vector<std::size_t>& keep) {
    if (!member) return;
    std::vector<Point> pts;
    pts.reserve(keep.size());
    for (std::size_t i : keep) pts.push_back(a.points[i]);
    if (!hull_membership(PointSet(a.dim, std::move(pts)), y, tol)) member = false;
  });
  return member;
}

/// The d=1 kernel: [(n+1)-th smallest, (n+1)-th largest] of the values.
inline std::pair<double, double> sorted_trim_interval(std::vector<double> values,
                                                      std::size_t n) {
  if (values.size() < 2 * n + 1) {
    throw std::invalid_argument("sorted_trim_interval: need at least 2n+1 values");
  }
  std::sort(values.begin(), values.end());
  return {values[n], values[values.size() - 1 - n]};
}

enum class CheckStatus { Pass, Fail, SolverIssue };
enum class AgreementStatus { Pass, NotApplicable };

/// Whole-run audit: validity against the initial
/// benign hull, round-to-round nesting of the benign hull, the agreement
/// certificate, and the diameter/contraction series.
struct AuditReport {
  CheckStatus validity = CheckStatus::Pass;
  std::optional<std::size_t> validity_round;
  CheckStatus nesting = CheckStatus::Pass;
  std::optional<std::size_t> nesting_round;
  AgreementStatus agreement = AgreementStatus::NotApplicable;
  std::optional<std::map<int, double>> gamma;  // benign node -> weight on x_i(0)
  bool gamma_valid = false;
  Point final_point;  // centroid of the last benign states
  std::vector<double> diameters;
  std::vector<double> contraction;  // diam(k+W)/diam(k) where diam(k) > epsilon
  std::vector<std::string> solver_errors;

  bool all_pass() const {
    return validity == CheckStatus::Pass && nesting == CheckStatus::Pass &&
           solver_errors.empty() &&
           (agreement == AgreementStatus::NotApplicable || gamma_valid);
  }
};

inline AuditReport audit_trajectory(const Trajectory& traj, const Scenario& sc,
                                    double tol = 1e-6, std::size_t window = 10) {
  if (traj.rounds.empty()) throw std::invalid_argument("audit_trajectory: empty trajectory");
  const std::vector<int> benign = sc.benign_nodes();

  auto benign_states = [&](const RoundRecord& rec) {
    std::vector<Point> out;
    out.reserve(benign.size());
    for (int b : benign) out.push_back(rec.states[static_cast<std::size_t>(b)]);
    return out;
  };
  const PointSet initial_hull(sc.dim, benign_states(traj.rounds.front()));

  AuditReport report;

  // (a) validity: every benign state stays in Conv of benign initial states
  for (const RoundRecord& rec : traj.rounds) {
    if (report.validity != CheckStatus::Pass) break;
    for (int b : benign) {
      try {
        if (!hull_membership(initial_hull, rec.states[static_cast<std::size_t>(b)], tol)) {
          report.validity = CheckStatus::Fail;
          report.validity_round = rec.round;
          break;
        }
      } catch (const SolverFailure& err) {
        report.validity = CheckStatus::SolverIssue;
        report.validity_round = rec.round;
        report.solver_errors.push_back("validity round " + std::to_string(rec.round) + ": " +
                                       err.what());
        break;
      }
    }
  }

  // (b) nesting: Omega(k+1) inside Omega(k)
  for (std::size_t k = 0; k + 1 < traj.rounds.size(); ++k) {
    if (report.nesting != CheckStatus::Pass) break;
    const PointSet hull_k(sc.dim, benign_states(traj.rounds[k]));
    for (int b : benign) {
      const Point& next = traj.rounds[k + 1].states[static_cast<std::size_t>(b)];
      try {
        if (!hull_membership(hull_k, next, tol)) {
          report.nesting = CheckStatus::Fail;
          report.nesting_round = traj.rounds[k + 1].round;
          break;
        }
      } catch (const SolverFailure& err) {
        report.nesting = CheckStatus::SolverIssue;
        report.nesting_round = traj.rounds[k + 1].round;
        report.solver_errors.push_back("nesting round " +
                                       std::to_string(traj.rounds[k + 1].round) + ": " +
                                       err.what());
        break;
      }
    }
  }

  // (d) diameter series and windowed contraction ratios
  report.diameters.reserve(traj.rounds.size());
  for (const RoundRecord& rec : traj.rounds) {
    report.diameters.push_back(diameter(benign_states(rec)));
  }
  for (std::size_t k = 0; k + window < report.diameters.size(); ++k) {
    if (report.diameters[k] > sc.epsilon) {
      report.contraction.push_back(report.diameters[k + window] / report.diameters[k]);
    }
  }

  // (c) agreement certificate over the benign initial states
  const std::vector<Point> last = benign_states(traj.rounds.back());
  report.final_point.assign(sc.dim, 0.0);
  for (const Point& p : last) {
    add_scaled_inplace(report.final_point, p, 1.0 / static_cast<double>(last.size()));
  }
  if (report.diameters.back() < sc.epsilon) {
    report.agreement = AgreementStatus::Pass;
    try {
      const auto cert = hull_membership(initial_hull, report.final_point, tol);
      if (cert) {
        std::map<int, double> gamma;
        for (std::size_t i = 0; i < benign.size(); ++i) gamma[benign[i]] = cert->lambdas[i];
        report.gamma = std::move(gamma);
        report.gamma_valid = true;
      }
    } catch (const SolverFailure& err) {
      report.solver_errors.push_back(std::string("gamma: ") + err.what());
    }
  }
  return report;
}

}  // namespace safekernel
