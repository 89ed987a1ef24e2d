#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "mpcport/market_model.hpp"
#include "mpcport/markov_chain.hpp"
#include "mpcport/mpc_controller.hpp"

// Brute-force verification of the recursive block formulas: the stacked
// horizon system is sampled literally and its expectations are estimated by
// Monte Carlo. Test-only; the production path never links this.
namespace mpcport::oracle {

/// One joint sample of the stacked m-step prediction system.
struct StackedPrediction {
    Eigen::VectorXd psi;               // [A, A^2, ..., A^m]
    std::vector<Eigen::MatrixXd> phi;  // channels j = 0..n, each m x M
    std::vector<int> path;             // sampled regimes at k+1..k+m
    Eigen::VectorXd xi;                // stacked indicators, m*v
    Eigen::MatrixXd noise;             // m x n standard draws, row t-1 = w(k+t)
    Eigen::MatrixXd delta;             // blockdiag R(k,0..m-1)
    Eigen::RowVectorXd delta1;         // [R1(k,1), ..., R1(k,m)]
};

/// Samples a regime path from the chain (one transition per horizon step,
/// starting from theta) plus the noise block, and assembles the lower-block-
/// triangular prediction matrices. Block (i,t) of phi_j is A^(i-t) B_j of the
/// regime sampled at k+t.
StackedPrediction sample_stacked(const TransitionMatrix& chain, const RegimeIndicator& theta,
                                 const MarketModel& model, const PredictionConfig& cfg, int k,
                                 std::mt19937_64& rng);

/// Realized stacked wealth X(k+1) = Psi V + Phi_0 U + sum_j Phi_j diag{W_j} U.
Eigen::VectorXd stacked_wealths(const StackedPrediction& sp, double wealth,
                                const Eigen::VectorXd& controls);

struct McBlocks {
    Eigen::MatrixXd h;  // includes the control-cost block diagonal
    Eigen::MatrixXd h_se;
    Eigen::RowVectorXd g, g_se;
    Eigen::RowVectorXd f, f_se;
    Eigen::MatrixXd mean_indicator;  // row t-1 = sample mean of theta(k+t)
    long samples = 0;
};

/// Monte-Carlo estimates (with per-entry standard errors) of the H, G, F
/// expectations. Sampling runs on a fixed number of independent streams with
/// a deterministic merge, so results depend only on (samples, seed, streams),
/// not on the hardware.
McBlocks mc_blocks(const TransitionMatrix& chain, const RegimeIndicator& theta,
                   const MarketModel& model, const PredictionConfig& cfg, int k, long samples,
                   std::uint64_t seed, int streams = 8);

/// Best feasible point over a uniform grid (exhaustive when resolution^M is
/// small) or a fixed-seed sample cloud. Independent optimality check for the
/// active-set solver.
Eigen::VectorXd grid_argmin(const QuadraticProgram& qp, int resolution);

}  // namespace mpcport::oracle
