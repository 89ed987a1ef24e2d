#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace mpcport {

enum class BoundSide { Lower, Upper };

struct ActiveConstraint {
    int row = 0;
    BoundSide side = BoundSide::Lower;
    double multiplier = 0.0;  // nonnegative for both sides
};

/// Result of a dense strictly-convex QP solve.
struct QPSolution {
    Eigen::VectorXd minimizer;
    double objective = 0.0;
    std::vector<ActiveConstraint> active_set;
    Eigen::VectorXd lambda_lower;  // per-row multipliers, >= 0
    Eigen::VectorXd lambda_upper;
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// Optional warm start: a candidate point plus the previous active set.
/// Ignored when the point is not feasible.
struct WarmStart {
    Eigen::VectorXd point;
    std::vector<std::pair<int, BoundSide>> working_set;
};

/// Minimize x^T H x + c^T x subject to lower <= A x <= upper (element-wise,
/// +-infinity for absent sides). H must be symmetric positive definite, which
/// makes the minimizer unique.
///
/// Primal active-set method. The Cholesky factor of H is computed once per
/// solve; each working-set change updates only the small projected system.
/// Constraint selection ties break on the lowest row index, lower side before
/// upper, so identical inputs give bit-identical results.
///
/// Throws SolverError when the constraints are infeasible, H is not positive
/// definite, or the iteration cap 50*(M+K) is exceeded.
QPSolution solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                 const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                 const Eigen::VectorXd& upper, double tol = 1e-9,
                 const WarmStart* warm_start = nullptr);

/// Max-norm KKT residual of a candidate point and multiplier pair:
/// stationarity 2Hx + c + A^T(lambda_upper - lambda_lower), primal
/// feasibility violations, negative multipliers, and complementarity
/// products. Zero (up to round-off) exactly at the optimum.
double kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                    const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                    const Eigen::VectorXd& upper, const Eigen::VectorXd& point,
                    const Eigen::VectorXd& lambda_lower,
                    const Eigen::VectorXd& lambda_upper);

}  // namespace mpcport
