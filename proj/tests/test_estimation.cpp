#include <doctest.h>

#include "mpcport/errors.hpp"
#include "mpcport/estimation.hpp"

using namespace mpcport;

TEST_SUITE("estimation") {

TEST_CASE("config validation") {
    EstimationConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.sigma_low = 0.03;  // above sigma_high
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = EstimationConfig{};
    cfg.vol_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = EstimationConfig{};
    cfg.ma_window = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("threshold classification") {
    EstimationConfig cfg;  // MICEX threshold 0.015
    const RegimeSequence states = classify_regimes({0.01, 0.02, -0.02, -0.001}, cfg);
    CHECK(states == RegimeSequence{1, 2, 2, 1});

    // a return exactly at the threshold counts as high volatility
    CHECK(classify_regimes({0.015}, cfg) == RegimeSequence{2});
    CHECK(classify_regimes({-0.015}, cfg) == RegimeSequence{2});

    CHECK(classify_regimes({0.0, 0.0, 0.0}, cfg) == RegimeSequence{1, 1, 1});
    CHECK_THROWS_AS(classify_regimes({}, cfg), std::invalid_argument);
}

TEST_CASE("classification is scale consistent") {
    EstimationConfig cfg;
    const std::vector<double> returns{0.004, -0.03, 0.016, 0.0149, -0.0151};
    const RegimeSequence base = classify_regimes(returns, cfg);
    for (double factor : {0.1, 2.0, 55.0}) {
        EstimationConfig scaled = cfg;
        scaled.vol_threshold *= factor;
        std::vector<double> r2 = returns;
        for (double& r : r2) r *= factor;
        CHECK(classify_regimes(r2, scaled) == base);
    }
}

TEST_CASE("rolling-std classification switch") {
    EstimationConfig cfg;
    cfg.vol_measure = VolatilityMeasure::RollingStd;
    cfg.vol_window = 2;
    cfg.vol_threshold = 0.01;
    // day 0: std of {0.02} = 0 -> low; day 1: std of {0.02, -0.02} = 0.02 -> high
    const RegimeSequence states = classify_regimes({0.02, -0.02, -0.02, -0.02}, cfg);
    CHECK(states[0] == 1);
    CHECK(states[1] == 2);
    CHECK(states[3] == 1);  // std of {-0.02, -0.02} = 0
}

TEST_CASE("moving-average expected returns") {
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(10, 2, 50.0);
    CHECK(expected_returns(flat, 4, 10).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd prices(3, 1);
    prices << 100.0, 101.0, 102.01;
    const Eigen::VectorXd mu = expected_returns(prices, 2, 3);
    CHECK(mu(0) == doctest::Approx(0.01).epsilon(1e-12));

    CHECK_THROWS_AS(expected_returns(prices, 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(expected_returns(prices, 2, 2), std::invalid_argument);

    // both reference windows are usable
    Eigen::MatrixXd longer = Eigen::MatrixXd::Constant(30, 3, 10.0);
    CHECK_NOTHROW(expected_returns(longer, 13, 30));
    CHECK_NOTHROW(expected_returns(longer, 21, 30));
}

TEST_CASE("expected returns use strictly past data") {
    Eigen::MatrixXd prices(8, 1);
    prices << 100, 101, 99, 102, 104, 103, 105, 106;
    const Eigen::VectorXd base = expected_returns(prices, 3, 5);
    Eigen::MatrixXd tampered = prices;
    tampered(5, 0) = 500.0;  // day >= k must not matter
    tampered(7, 0) = 1.0;
    CHECK(expected_returns(tampered, 3, 5) == base);
}

TEST_CASE("constant-return series is recovered exactly") {
    Eigen::MatrixXd prices(9, 1);
    prices(0, 0) = 100.0;
    for (int d = 1; d < 9; ++d) prices(d, 0) = prices(d - 1, 0) * 1.005;
    const Eigen::VectorXd mu = expected_returns(prices, 5, 9);
    CHECK(mu(0) == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("regime volatility matrices for the reference markets") {
    EstimationConfig micex;  // defaults: 0.01 / 0.02
    auto vols = regime_volatilities(micex, 3);
    REQUIRE(vols.size() == 2);
    CHECK((vols[0] - 0.01 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((vols[1] - 0.02 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

    EstimationConfig nyse;
    nyse.vol_threshold = 0.01;
    nyse.sigma_low = 0.005;
    nyse.sigma_high = 0.02;
    auto nv = regime_volatilities(nyse, 2);
    CHECK(nv[0](0, 0) == 0.005);
    CHECK(nv[1](1, 1) == 0.02);

    EstimationConfig forex;
    forex.vol_threshold = 0.006;
    forex.sigma_low = 0.004;
    forex.sigma_high = 0.008;
    auto fv = regime_volatilities(forex, 2);
    CHECK(fv[0](1, 1) == 0.004);
    CHECK(fv[1](0, 0) == 0.008);
}

}  // TEST_SUITE
