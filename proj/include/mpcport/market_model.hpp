#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpcport/markov_chain.hpp"

namespace mpcport {

/// Money allocated per instrument: entries 1..n are risky-asset amounts,
/// entry n+1 is the borrowed amount. All in currency units.
using AllocationVector = Eigen::VectorXd;

/// Per-regime return parameters: expected simple returns per period and the
/// volatility matrix (sigma * sigma^T is the return covariance).
struct RegimeParameters {
    Eigen::VectorXd mu;     // n
    Eigen::MatrixXd sigma;  // n x n

    /// Diagonal volatilities with a shared expected-return vector.
    static RegimeParameters diagonal(Eigen::VectorXd mu, double sigma_diag);
};

/// Regime-modulated market: one parameter set per chain state plus the
/// risk-free lending and borrowing rates (per period, lend_rate <= borrow_rate).
class MarketModel {
public:
    MarketModel(std::vector<RegimeParameters> regimes, double lend_rate, double borrow_rate);

    int num_assets() const { return num_assets_; }
    int num_regimes() const { return static_cast<int>(regimes_.size()); }
    double lend_rate() const { return lend_rate_; }
    double borrow_rate() const { return borrow_rate_; }
    const RegimeParameters& regime(int q) const;  // 1-based

private:
    std::vector<RegimeParameters> regimes_;
    double lend_rate_;
    double borrow_rate_;
    int num_assets_;
};

/// Excess-return row [mu_1 - r1, ..., mu_n - r1, r1 - r2] of regime q.
Eigen::RowVectorXd b0_row(const MarketModel& model, int q);

/// Volatility row for noise channel j of regime q: the j-th column of sigma
/// followed by a zero for the borrowing entry.
Eigen::RowVectorXd bj_row(const MarketModel& model, int q, int j);

/// Realized simple returns along a regime path: eta(k) = mu(q(k)) + sigma(q(k)) w(k).
/// `noise` holds one row of standard draws per step.
Eigen::MatrixXd simulate_returns(const MarketModel& model, const RegimeSequence& regime_path,
                                 const Eigen::MatrixXd& noise);

/// One-step self-financing wealth update:
/// V' = (1+r1) V + sum_i (eta_i - r1) u_i - (r2 - r1) u_{n+1}.
double wealth_step(const MarketModel& model, double wealth, const AllocationVector& u,
                   const Eigen::VectorXd& eta);

/// Amount left in the risk-free asset: u_0 = V - sum_i u_i + u_{n+1}.
double riskfree_allocation(double wealth, const AllocationVector& u);

}  // namespace mpcport
