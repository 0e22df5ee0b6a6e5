#pragma once

#include "sage/core.hpp"

#include <stdexcept>
#include <string>

namespace sage {

class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error("lp: " + what) {}
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

/// min c^T x  s.t.  M x <= q, with every variable free in sign.
struct LinearProgram {
  Vector objective;
  Matrix constraints;
  Vector rhs;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;  // set when Optimal
  double objective = 0.0;
  int pivots = 0;
};

/// Dense simplex solve. Rows are pre-scaled to unit max-|coefficient| and an
/// Optimal x satisfies the scaled rows to 1e-6 * max(1, |q_scaled|_inf).
/// Throws NumericalFailure when no status can be certified.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace sage
