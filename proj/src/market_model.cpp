#include "mpcport/market_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpcport {

RegimeParameters RegimeParameters::diagonal(Eigen::VectorXd mu, double sigma_diag) {
    const auto n = mu.size();
    RegimeParameters p;
    p.mu = std::move(mu);
    p.sigma = sigma_diag * Eigen::MatrixXd::Identity(n, n);
    return p;
}

MarketModel::MarketModel(std::vector<RegimeParameters> regimes, double lend_rate,
                         double borrow_rate)
    : regimes_(std::move(regimes)), lend_rate_(lend_rate), borrow_rate_(borrow_rate) {
    if (regimes_.empty()) {
        throw std::invalid_argument("MarketModel: at least one regime required");
    }
    if (!(lend_rate_ <= borrow_rate_)) {
        throw std::invalid_argument("MarketModel: lending rate must not exceed borrowing rate");
    }
    num_assets_ = static_cast<int>(regimes_.front().mu.size());
    for (const auto& reg : regimes_) {
        if (reg.mu.size() != num_assets_ || reg.sigma.rows() != num_assets_ ||
            reg.sigma.cols() != num_assets_) {
            throw std::invalid_argument("MarketModel: all regimes must share the asset count");
        }
        // sigma sigma^T must be PSD; a tiny negative eigenvalue is numerical noise.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reg.sigma * reg.sigma.transpose());
        if (eig.eigenvalues().minCoeff() < -1e-12) {
            throw std::invalid_argument("MarketModel: sigma sigma^T not positive semidefinite");
        }
    }
}

const RegimeParameters& MarketModel::regime(int q) const {
    if (q < 1 || q > num_regimes()) {
        throw std::invalid_argument("MarketModel: regime index " + std::to_string(q) +
                                    " outside {1..." + std::to_string(num_regimes()) + "}");
    }
    return regimes_[static_cast<std::size_t>(q - 1)];
}

Eigen::RowVectorXd b0_row(const MarketModel& model, int q) {
    const auto& reg = model.regime(q);
    const int n = model.num_assets();
    Eigen::RowVectorXd row(n + 1);
    row.head(n) = (reg.mu.array() - model.lend_rate()).transpose();
    row(n) = model.lend_rate() - model.borrow_rate();
    return row;
}

Eigen::RowVectorXd bj_row(const MarketModel& model, int q, int j) {
    const auto& reg = model.regime(q);
    const int n = model.num_assets();
    if (j < 1 || j > n) {
        throw std::invalid_argument("bj_row: noise index " + std::to_string(j) +
                                    " outside {1..." + std::to_string(n) + "}");
    }
    Eigen::RowVectorXd row(n + 1);
    row.head(n) = reg.sigma.col(j - 1).transpose();
    row(n) = 0.0;
    return row;
}

Eigen::MatrixXd simulate_returns(const MarketModel& model, const RegimeSequence& regime_path,
                                 const Eigen::MatrixXd& noise) {
    const auto steps = static_cast<Eigen::Index>(regime_path.size());
    if (noise.rows() != steps || noise.cols() != model.num_assets()) {
        throw std::invalid_argument("simulate_returns: noise must be steps x n");
    }
    Eigen::MatrixXd returns(steps, model.num_assets());
    for (Eigen::Index k = 0; k < steps; ++k) {
        const auto& reg = model.regime(regime_path[static_cast<std::size_t>(k)]);
        returns.row(k) = (reg.mu + reg.sigma * noise.row(k).transpose()).transpose();
    }
    return returns;
}

double wealth_step(const MarketModel& model, double wealth, const AllocationVector& u,
                   const Eigen::VectorXd& eta) {
    const int n = model.num_assets();
    if (u.size() != n + 1 || eta.size() != n) {
        throw std::invalid_argument("wealth_step: allocation must be n+1, returns n");
    }
    if (!std::isfinite(wealth) || !u.allFinite() || !eta.allFinite()) {
        throw std::invalid_argument("wealth_step: non-finite input");
    }
    const double r1 = model.lend_rate();
    const double r2 = model.borrow_rate();
    double next = (1.0 + r1) * wealth;
    next += ((eta.array() - r1) * u.head(n).array()).sum();
    next -= (r2 - r1) * u(n);
    return next;
}

double riskfree_allocation(double wealth, const AllocationVector& u) {
    const auto n = u.size() - 1;
    return wealth - u.head(n).sum() + u(n);
}

}  // namespace mpcport
