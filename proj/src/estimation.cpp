#include "mpcport/estimation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mpcport/errors.hpp"

namespace mpcport {

void EstimationConfig::validate() const {
    if (!(vol_threshold > 0.0)) throw ConfigError("estimation: vol_threshold must be > 0");
    if (!(0.0 < sigma_low && sigma_low < sigma_high)) {
        throw ConfigError("estimation: need 0 < sigma_low < sigma_high");
    }
    if (ma_window < 1 || mle_window < 1 || vol_window < 1) {
        throw ConfigError("estimation: windows must be >= 1");
    }
}

RegimeSequence classify_regimes(const std::vector<double>& index_returns,
                                const EstimationConfig& cfg) {
    if (index_returns.empty()) {
        throw std::invalid_argument("classify_regimes: empty return sequence");
    }
    RegimeSequence states(index_returns.size());
    if (cfg.vol_measure == VolatilityMeasure::AbsReturn) {
        for (std::size_t k = 0; k < index_returns.size(); ++k) {
            states[k] = std::abs(index_returns[k]) < cfg.vol_threshold ? 1 : 2;
        }
        return states;
    }
    // Trailing standard deviation over the most recent vol_window returns
    // (fewer on the first days).
    for (std::size_t k = 0; k < index_returns.size(); ++k) {
        const std::size_t lo = k + 1 >= static_cast<std::size_t>(cfg.vol_window)
                                   ? k + 1 - static_cast<std::size_t>(cfg.vol_window)
                                   : 0;
        const std::size_t len = k - lo + 1;
        double mean = 0.0;
        for (std::size_t i = lo; i <= k; ++i) mean += index_returns[i];
        mean /= static_cast<double>(len);
        double var = 0.0;
        for (std::size_t i = lo; i <= k; ++i) {
            const double d = index_returns[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(len);
        states[k] = std::sqrt(var) < cfg.vol_threshold ? 1 : 2;
    }
    return states;
}

Eigen::VectorXd expected_returns(const Eigen::MatrixXd& prices, int window, int k) {
    if (window < 1) throw std::invalid_argument("expected_returns: window must be >= 1");
    if (k < window + 1 || k > prices.rows()) {
        throw std::invalid_argument("expected_returns: need at least window+1 prices before day " +
                                    std::to_string(k));
    }
    const int n = static_cast<int>(prices.cols());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    for (int d = k - window; d <= k - 1; ++d) {
        mu += (prices.row(d).array() / prices.row(d - 1).array() - 1.0).matrix().transpose();
    }
    return mu / static_cast<double>(window);
}

std::vector<Eigen::MatrixXd> regime_volatilities(const EstimationConfig& cfg, int n) {
    return {cfg.sigma_low * Eigen::MatrixXd::Identity(n, n),
            cfg.sigma_high * Eigen::MatrixXd::Identity(n, n)};
}

}  // namespace mpcport
