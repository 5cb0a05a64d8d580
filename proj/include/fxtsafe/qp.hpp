#pragma once

#include <string_view>
#include <vector>

#include "fxtsafe/types.hpp"

namespace fxtsafe::qp {

/// minimize 0.5 w'Hw + c'w  s.t.  A w <= b,  lb <= w <= ub.
/// Infinite bounds are allowed and ignored.
struct QuadraticProgram {
    Mat H;
    Vec c;
    Mat A;
    Vec b;
    Vec lb;
    Vec ub;

    int dim() const { return static_cast<int>(c.size()); }
    int rows() const { return static_cast<int>(b.size()); }

    /// Unconstrained problem of dimension d with infinite bounds.
    static QuadraticProgram unconstrained(const Mat& H, const Vec& c);
};

enum class Status { optimal, infeasible, max_iterations };

std::string_view to_string(Status status);

/// Lagrange multipliers, all nonnegative at a KKT point.
struct Multipliers {
    Vec rows;   ///< for A w <= b
    Vec lower;  ///< for -w <= -lb
    Vec upper;  ///< for  w <= ub
};

struct QPSolution {
    Vec w_star;
    Status status = Status::infeasible;
    double objective = 0.0;
    /// Active constraint indices: rows are 0..k-1, lower bounds k..k+d-1, upper bounds k+d..k+2d-1.
    std::vector<int> active_set;
    Multipliers multipliers;
    double kkt_residual = 0.0;
    int iterations = 0;
};

double objective(const QuadraticProgram& qp, const Vec& w);

/// Max of stationarity, primal violation, dual negativity and complementarity residuals.
double kkt_residual(const QuadraticProgram& qp, const Vec& w, const Multipliers& mult);

/// Dense dual active-set solver. H must be positive definite.
///
/// Starts from the unconstrained minimizer and adds the most violated constraint each
/// pass (lowest index on ties), dropping blocking constraints when their multiplier
/// would turn negative. When no primal or dual step exists for a violated constraint
/// the problem is reported infeasible. Throws std::invalid_argument when H is not
/// positive definite or the dimensions disagree.
QPSolution solve(const QuadraticProgram& qp);

}  // namespace fxtsafe::qp
