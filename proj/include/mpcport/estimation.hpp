#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpcport/market_model.hpp"
#include "mpcport/markov_chain.hpp"

namespace mpcport {

enum class VolatilityMeasure { AbsReturn, RollingStd };

/// Volatility-threshold regime pipeline parameters. The default measure is
/// the absolute daily return of the index; a trailing standard deviation over
/// `vol_window` days is available behind the switch.
struct EstimationConfig {
    double vol_threshold = 0.015;
    double sigma_low = 0.01;
    double sigma_high = 0.02;
    int ma_window = 13;
    int mle_window = 200;
    VolatilityMeasure vol_measure = VolatilityMeasure::AbsReturn;
    int vol_window = 10;

    void validate() const;
};

/// Two-state classification of index returns: a day measures low-volatility
/// (state 1) when its volatility is strictly below the threshold, else
/// high-volatility (state 2).
RegimeSequence classify_regimes(const std::vector<double>& index_returns,
                                const EstimationConfig& cfg);

/// Moving-average expected returns at decision day k, one entry per asset.
/// Uses the last `window` realized simple returns computed from prices
/// strictly before day k (price rows k-window-1 .. k-1).
Eigen::VectorXd expected_returns(const Eigen::MatrixXd& prices, int window, int k);

/// The two diagonal regime volatility matrices sigma_low*I and sigma_high*I.
std::vector<Eigen::MatrixXd> regime_volatilities(const EstimationConfig& cfg, int n);

}  // namespace mpcport
