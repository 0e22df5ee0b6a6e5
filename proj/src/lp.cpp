#include "sage/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sage {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-10;
constexpr double kHarrisTol = 1e-10;
constexpr double kPhaseOneTol = 1e-9;
constexpr double kUnboundedCostTol = 1e-9;
constexpr double kFeasibilityTol = 1e-6;
constexpr int kDegenerateBeforeBland = 50;

// Revised simplex on  min w^T y  s.t.  E y = f, y >= 0  (f >= 0) with one
// artificial per row appended after the m structural columns. The basis has
// only as many rows as the primal has variables, so it is refactored from
// scratch every iteration instead of updating a tableau.
class Simplex {
 public:
  Simplex(const Matrix& E, const Vector& f) : n_(E.rows()), m_(E.cols()), f_(f) {
    E_.resize(n_, m_ + n_);
    E_.leftCols(m_) = E;
    E_.rightCols(n_).setIdentity();
    basis_.resize(n_);
    for (Eigen::Index r = 0; r < n_; ++r) basis_[r] = m_ + r;
    refactor();
  }

  enum class Result { Optimal, Unbounded };

  // Structural-only entering columns; artificials may only leave. A column
  // with no pivot row but only a rounding-level reduced cost is parked
  // instead of certifying unboundedness; with `bounded` set, every such
  // column is parked.
  Result run(const Vector& w, int& pivots, bool bounded) {
    std::vector<char> parked(m_, 0);
    bool bland = false;
    int degenerate = 0;
    double best_obj = objective_value(w);
    const int cap = 50 * static_cast<int>(m_ + n_) + 1000;
    for (int it = 0;; ++it) {
      if (it > cap) throw NumericalFailure("simplex iteration limit reached");
      Vector wb(n_);
      for (Eigen::Index r = 0; r < n_; ++r) wb[r] = w[basis_[r]];
      const Vector pi = lu_t_.solve(wb);
      const Vector d = w.head(m_) - E_.leftCols(m_).transpose() * pi;

      Eigen::Index enter = -1;
      double best = -kCostTol;
      for (Eigen::Index j = 0; j < m_; ++j) {
        if (!parked[j] && d[j] < best) {
          enter = j;
          if (bland) break;
          best = d[j];
        }
      }
      if (enter < 0) return Result::Optimal;

      const Vector col = lu_.solve(E_.col(enter));
      const Eigen::Index leave = leaving_row(col, bland);
      if (leave < 0) {
        const double noise = kUnboundedCostTol * std::max(1.0, col.cwiseAbs().maxCoeff());
        if (!bounded && d[enter] < -noise) return Result::Unbounded;
        parked[enter] = 1;
        continue;
      }

      const Eigen::Index old = basis_[leave];
      basis_[leave] = enter;
      if (!refactor()) {
        basis_[leave] = old;
        refactor();
        parked[enter] = 1;
        continue;
      }
      ++pivots;
      std::fill(parked.begin(), parked.end(), 0);

      // progress is judged against the best objective so far, so rounding
      // wobble cannot hide a cycle
      const double obj = objective_value(w);
      if (obj > best_obj - 1e-12 * std::max(1.0, std::abs(best_obj))) {
        if (++degenerate > kDegenerateBeforeBland) bland = true;
      } else {
        degenerate = 0;
        best_obj = obj;
      }
    }
  }

  double objective_value(const Vector& w) const {
    double v = 0.0;
    for (Eigen::Index r = 0; r < n_; ++r) v += w[basis_[r]] * std::max(0.0, xb_[r]);
    return v;
  }

  // Pivot zero-level artificials out of the basis where a structural column
  // allows it. Rows where none does are redundant and keep their artificial.
  void expel_artificials(int& pivots) {
    for (Eigen::Index r = 0; r < n_; ++r) {
      if (basis_[r] < m_) continue;
      const Vector row = E_.leftCols(m_).transpose() * lu_t_.solve(Vector::Unit(n_, r));
      Eigen::Index col = -1;
      double best = 1e-9 * std::max(1.0, row.cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < m_; ++j) {
        if (std::find(basis_.begin(), basis_.end(), j) != basis_.end()) continue;
        if (std::abs(row[j]) > best) {
          best = std::abs(row[j]);
          col = j;
        }
      }
      if (col < 0) continue;
      const Eigen::Index old = basis_[r];
      basis_[r] = col;
      if (refactor()) {
        ++pivots;
      } else {
        basis_[r] = old;
        refactor();
      }
    }
  }

  const std::vector<Eigen::Index>& basis() const { return basis_; }

 private:
  // Harris two-pass ratio test: bound the step with slightly relaxed ratios,
  // then take the largest pivot among rows within that bound. Under Bland's
  // rule the exact minimum ratio with the smallest basic index is used.
  Eigen::Index leaving_row(const Vector& col, bool bland) const {
    const double floor = kPivotTol * std::max(1.0, col.cwiseAbs().maxCoeff());
    Eigen::Index leave = -1;
    if (bland) {
      double best_ratio = 0.0;
      for (Eigen::Index r = 0; r < n_; ++r) {
        if (col[r] <= floor) continue;
        const double ratio = std::max(0.0, xb_[r]) / col[r];
        if (leave < 0) {
          leave = r;
          best_ratio = ratio;
          continue;
        }
        const double tie = 1e-12 * std::max(1.0, best_ratio);
        if (ratio < best_ratio - tie || (ratio <= best_ratio + tie && basis_[r] < basis_[leave])) {
          leave = r;
          best_ratio = std::min(ratio, best_ratio);
        }
      }
      return leave;
    }
    double relaxed = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < n_; ++r)
      if (col[r] > floor) relaxed = std::min(relaxed, (std::max(0.0, xb_[r]) + kHarrisTol) / col[r]);
    for (Eigen::Index r = 0; r < n_; ++r) {
      if (col[r] <= floor) continue;
      if (std::max(0.0, xb_[r]) / col[r] <= relaxed && (leave < 0 || col[r] > col[leave])) leave = r;
    }
    return leave;
  }

  // False when the basis is numerically singular; the caller must restore
  // the previous basis.
  bool refactor() {
    Matrix B(n_, n_);
    for (Eigen::Index r = 0; r < n_; ++r) B.col(r) = E_.col(basis_[r]);
    lu_.compute(B);
    if (!lu_.isInvertible()) return false;
    lu_t_.compute(B.transpose());
    xb_ = lu_.solve(f_);
    return true;
  }

  Eigen::Index n_, m_;
  Matrix E_;
  Vector f_;
  Vector xb_;
  Eigen::FullPivLU<Matrix> lu_;
  Eigen::FullPivLU<Matrix> lu_t_;
  std::vector<Eigen::Index> basis_;
};

enum class DualOutcome { Optimal, Infeasible, Unbounded };

// Solves the Lagrangian dual of  min c^T x s.t. M x <= q  (x free):
//   min q^T y  s.t.  M^T y = -c,  y >= 0.
// On Optimal, the primal x is recovered from the final basis, where every
// basic row of M holds with equality.
DualOutcome solve_dual(const Matrix& M, const Vector& q, const Vector& c, Vector& x, int& pivots) {
  const Eigen::Index m = M.rows();
  const Eigen::Index n = M.cols();

  Matrix E = M.transpose();
  Vector f = -c;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (f[j] < 0.0) {
      E.row(j) = -E.row(j);
      f[j] = -f[j];
    }
  }

  Simplex splx(E, f);

  Vector phase_one = Vector::Zero(m + n);
  phase_one.tail(n).setOnes();
  splx.run(phase_one, pivots, true);
  if (splx.objective_value(phase_one) > kPhaseOneTol * std::max(1.0, f.sum())) return DualOutcome::Infeasible;
  splx.expel_artificials(pivots);

  Vector phase_two = Vector::Zero(m + n);
  phase_two.head(m) = q;
  if (splx.run(phase_two, pivots, false) == Simplex::Result::Unbounded) return DualOutcome::Unbounded;

  Matrix K = Matrix::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  const auto& basis = splx.basis();
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index b = basis[r];
    if (b < m) {
      K.row(r) = M.row(b);
      rhs[r] = q[b];
    } else {
      K(r, b - m) = 1.0;
    }
  }
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) throw NumericalFailure("singular final basis");
  x = lu.solve(rhs);
  x += lu.solve(rhs - K * x);
  return DualOutcome::Optimal;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const Eigen::Index n = lp.objective.size();
  const Eigen::Index rows = lp.constraints.rows();
  if (n < 1) throw std::invalid_argument("solve_lp: need at least one variable");
  if (lp.constraints.cols() != n || lp.rhs.size() != rows)
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  if (!lp.objective.allFinite() || !lp.constraints.allFinite() || !lp.rhs.allFinite())
    throw std::invalid_argument("solve_lp: non-finite input");

  LpSolution out;

  // Row scaling to unit max-|coefficient|; all-zero rows are either vacuous
  // or prove infeasibility on their own.
  std::vector<Eigen::Index> kept;
  Vector row_scale(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mx = lp.constraints.row(i).cwiseAbs().maxCoeff();
    if (mx == 0.0) {
      if (lp.rhs[i] < -kFeasibilityTol) {
        out.status = LpStatus::Infeasible;
        return out;
      }
      continue;
    }
    row_scale[i] = 1.0 / mx;
    kept.push_back(i);
  }
  const Eigen::Index m = static_cast<Eigen::Index>(kept.size());
  if (m == 0) {
    // nothing constrains x: any nonzero cost direction is unbounded
    if ((lp.objective.array() != 0.0).any()) {
      out.status = LpStatus::Unbounded;
    } else {
      out.status = LpStatus::Optimal;
      out.x = Vector::Zero(n);
    }
    return out;
  }
  Matrix M(m, n);
  Vector q(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    M.row(k) = lp.constraints.row(kept[k]) * row_scale[kept[k]];
    q[k] = lp.rhs[kept[k]] * row_scale[kept[k]];
  }

  // Column equilibration, then normalization of q and c.
  Vector col_scale = Vector::Ones(n);
  for (Eigen::Index j = 0; j < n && m > 0; ++j) {
    const double mx = M.col(j).cwiseAbs().maxCoeff();
    if (mx > 0.0) col_scale[j] = 1.0 / mx;
  }
  M = M * col_scale.asDiagonal();
  const double q_scale = m > 0 ? std::max(1.0, q.cwiseAbs().maxCoeff()) : 1.0;
  Vector qn = q / q_scale;
  Vector cn = lp.objective.cwiseProduct(col_scale);
  const double c_scale = cn.cwiseAbs().maxCoeff();
  if (c_scale > 0.0) cn /= c_scale;

  Vector xs;
  switch (solve_dual(M, qn, cn, xs, out.pivots)) {
    case DualOutcome::Unbounded:
      out.status = LpStatus::Infeasible;
      return out;
    case DualOutcome::Infeasible: {
      // Dual infeasible: the primal is unbounded if it is feasible at all.
      Vector probe;
      const auto feas = solve_dual(M, qn, Vector::Zero(n), probe, out.pivots);
      out.status = feas == DualOutcome::Optimal ? LpStatus::Unbounded : LpStatus::Infeasible;
      return out;
    }
    case DualOutcome::Optimal:
      break;
  }

  out.x = (q_scale * xs).cwiseProduct(col_scale);
  if (!out.x.allFinite()) throw NumericalFailure("non-finite solution");
  if (m > 0) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::Index i = kept[k];
      worst = std::max(worst, row_scale[i] * (lp.constraints.row(i).dot(out.x) - lp.rhs[i]));
    }
    if (worst > kFeasibilityTol * q_scale) throw NumericalFailure("solution violates constraints");
  }
  out.status = LpStatus::Optimal;
  out.objective = lp.objective.dot(out.x);
  return out;
}

}  // namespace sage
