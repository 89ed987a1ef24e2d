#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mpcport/market_model.hpp"
#include "mpcport/markov_chain.hpp"
#include "mpcport/qp_solver.hpp"

namespace mpcport {

/// Receding-horizon weights. Control costs and tracking weights are indexed
/// by decision step k and horizon offset; the benchmark is an absolute-step
/// wealth target known in advance.
struct PredictionConfig {
    int horizon = 1;                                            // m >= 1
    std::function<Eigen::MatrixXd(int k, int i)> control_cost;  // R(k,i), i in 0..m-1, SPD
    std::function<double(int k, int i)> rho;                    // rho(k,i), i in 1..m
    std::function<double(int k)> benchmark;                     // V0(k) > 0
};

/// Constant weights R = r_diag*I and rho, with a geometric benchmark
/// V0(k) = v0_init * (1 + growth)^k. `dim` is the control size n+1.
PredictionConfig make_constant_config(int horizon, int dim, double r_diag, double rho,
                                      double v0_init, double growth);

/// Wealth-fraction trading limits. beta holds the n lower fractions; gamma
/// holds n+2 upper fractions laid out as [assets 1..n, risk-free cap,
/// borrowing cap].
struct ConstraintSpec {
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;

    static ConstraintSpec uniform(int n, double beta_all, double gamma_asset,
                                  double gamma_riskfree, double gamma_borrow);
    void validate(int n) const;
};

/// Whether the trading limits bind only the applied control block (the
/// printed formulation) or every horizon block at the current wealth.
enum class ConstraintMode { FirstBlock, FullHorizon };

/// The per-step quadratic program: minimize linear^T U + U^T H U subject to
/// lower <= constraint_operator * U <= upper.
struct QuadraticProgram {
    Eigen::MatrixXd hessian;              // M x M, M = m(n+1)
    Eigen::VectorXd linear;               // (2 V G - F)^T
    Eigen::MatrixXd constraint_operator;  // stacked, m(n+2) x M
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// Scalar accumulators that collapse the horizon sums:
/// Q1(t) = A^2 Q1(t-1) + 1 with Q1(0) = 1, and
/// Q2(t) = A Q2(t-1) + R1(k, m-t) with Q2(0) = R1(k, m).
struct BlockRecursionState {
    std::vector<double> q1;         // Q1(0..m)
    std::vector<double> q2;         // Q2(0..m-1)
    std::vector<double> r1_coeffs;  // R1(k, t) for t = 1..m at index t-1
    double a = 1.0;                 // A = 1 + r1
};

/// R1(k, t) = 2 V0(k+t) + rho(k, t), t in 1..m.
double r1_coefficient(const PredictionConfig& cfg, int k, int t);

BlockRecursionState q_recursions(const PredictionConfig& cfg, const MarketModel& model, int k);

/// Quadratic-term block matrix. Diagonal blocks combine the control cost with
/// the regime-weighted sum of squared B rows; off-diagonal blocks couple the
/// excess-return rows through the joint regime occupancy.
Eigen::MatrixXd build_H(const TransitionMatrix& chain, const RegimeIndicator& theta,
                        const MarketModel& model, const PredictionConfig& cfg, int k);

/// Benchmark-free linear weight row: block t is A^t Q1(m-t) E{B0(k+t)}.
Eigen::RowVectorXd build_G(const TransitionMatrix& chain, const RegimeIndicator& theta,
                           const MarketModel& model, const PredictionConfig& cfg, int k);

/// Target-weighted linear row: block t is Q2(m-t) E{B0(k+t)}.
Eigen::RowVectorXd build_F(const TransitionMatrix& chain, const RegimeIndicator& theta,
                           const MarketModel& model, const PredictionConfig& cfg, int k);

struct StackedConstraints {
    Eigen::MatrixXd op;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// Constraint system for current wealth. The first block maps the control to
/// asset amounts, the risk-free amount and the borrowing amount; remaining
/// horizon blocks are zero rows with zero bounds unless FullHorizon repeats
/// the first block.
StackedConstraints build_constraints(const ConstraintSpec& spec, double wealth, int n, int m,
                                     ConstraintMode mode = ConstraintMode::FirstBlock);

QuadraticProgram assemble_qp(const TransitionMatrix& chain, const RegimeIndicator& theta,
                             const MarketModel& model, const PredictionConfig& cfg,
                             const ConstraintSpec& spec, double wealth, int k,
                             ConstraintMode mode = ConstraintMode::FirstBlock);

/// First control block of the stacked minimizer.
AllocationVector extract_control(const Eigen::VectorXd& stacked, int n);

/// One receding-horizon step: assemble the program, solve it, return the
/// applied allocation. `solution` (optional) receives the full solve result
/// for warm-starting and diagnostics.
AllocationVector mpc_step(const TransitionMatrix& chain, const RegimeIndicator& theta,
                          const MarketModel& model, const PredictionConfig& cfg,
                          const ConstraintSpec& spec, double wealth, int k,
                          ConstraintMode mode = ConstraintMode::FirstBlock,
                          const WarmStart* warm_start = nullptr,
                          QPSolution* solution = nullptr);

}  // namespace mpcport
