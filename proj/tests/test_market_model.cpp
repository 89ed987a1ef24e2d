#include <doctest.h>

#include <random>

#include "mpcport/market_model.hpp"

using namespace mpcport;

namespace {

MarketModel one_regime(double mu, double sigma, double r1 = 0.0, double r2 = 0.0) {
    RegimeParameters reg;
    reg.mu = Eigen::VectorXd::Constant(1, mu);
    reg.sigma = Eigen::MatrixXd::Constant(1, 1, sigma);
    return MarketModel({reg}, r1, r2);
}

}  // namespace

TEST_SUITE("market_model") {

TEST_CASE("model validation") {
    CHECK_THROWS_AS(MarketModel({}, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(one_regime(0.001, 0.01, 0.002, 0.001), std::invalid_argument);
    CHECK_NOTHROW(one_regime(0.001, 0.01, 0.001, 0.001));  // r1 == r2 admitted

    RegimeParameters a, b;
    a.mu = Eigen::VectorXd::Zero(2);
    a.sigma = Eigen::MatrixXd::Identity(2, 2);
    b.mu = Eigen::VectorXd::Zero(3);
    b.sigma = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(MarketModel({a, b}, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("excess-return row") {
    const MarketModel m1 = one_regime(0.001, 0.01);
    const Eigen::RowVectorXd r1 = b0_row(m1, 1);
    CHECK(r1(0) == doctest::Approx(0.001));
    CHECK(r1(1) == 0.0);

    // mu == r1 and r2 == r1 wipe the row out
    const MarketModel flat = one_regime(0.0005, 0.01, 0.0005, 0.0005);
    CHECK(b0_row(flat, 1).cwiseAbs().maxCoeff() == 0.0);

    RegimeParameters reg;
    reg.mu = Eigen::Vector2d(0.002, 0.001);
    reg.sigma = 0.01 * Eigen::MatrixXd::Identity(2, 2);
    const MarketModel m2({reg}, 0.0001, 0.0002);
    const Eigen::RowVectorXd r2 = b0_row(m2, 1);
    CHECK(r2(0) == doctest::Approx(0.0019).epsilon(1e-12));
    CHECK(r2(1) == doctest::Approx(0.0009).epsilon(1e-12));
    CHECK(r2(2) == doctest::Approx(-0.0001).epsilon(1e-12));

    CHECK_THROWS_AS(b0_row(m1, 2), std::invalid_argument);
}

TEST_CASE("volatility rows") {
    const MarketModel m1 = one_regime(0.001, 0.01);
    const Eigen::RowVectorXd r = bj_row(m1, 1, 1);
    CHECK(r(0) == doctest::Approx(0.01));
    CHECK(r(1) == 0.0);

    RegimeParameters reg;
    reg.mu = Eigen::Vector2d::Zero();
    reg.sigma.resize(2, 2);
    reg.sigma << 0.01, 0.002, 0.003, 0.02;
    const MarketModel m2({reg}, 0.0, 0.0);
    const Eigen::RowVectorXd c2 = bj_row(m2, 1, 2);
    CHECK(c2(0) == doctest::Approx(0.002));
    CHECK(c2(1) == doctest::Approx(0.02));
    CHECK(c2(2) == 0.0);

    // diagonal sigma: single nonzero at the noise index
    RegimeParameters diag;
    diag.mu = Eigen::Vector3d::Zero();
    diag.sigma = 0.05 * Eigen::MatrixXd::Identity(3, 3);
    const MarketModel m3({diag}, 0.0, 0.0);
    const Eigen::RowVectorXd d2 = bj_row(m3, 1, 2);
    CHECK(d2(0) == 0.0);
    CHECK(d2(1) == doctest::Approx(0.05));
    CHECK(d2(2) == 0.0);
    CHECK(d2(3) == 0.0);

    CHECK_THROWS_AS(bj_row(m1, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(bj_row(m1, 1, 0), std::invalid_argument);
}

TEST_CASE("return simulation") {
    const MarketModel m = one_regime(0.001, 0.01);

    const Eigen::MatrixXd zero_noise = Eigen::MatrixXd::Zero(3, 1);
    const Eigen::MatrixXd det = simulate_returns(m, {1, 1, 1}, zero_noise);
    for (int k = 0; k < 3; ++k) CHECK(det(k, 0) == doctest::Approx(0.001));

    Eigen::MatrixXd w(1, 1);
    w << 2.0;
    CHECK(simulate_returns(m, {1}, w)(0, 0) == doctest::Approx(0.021));

    CHECK_THROWS_AS(simulate_returns(m, {1, 1}, zero_noise), std::invalid_argument);
}

TEST_CASE("simulated return moments honor the regime parameters") {
    RegimeParameters reg;
    reg.mu = Eigen::Vector2d(0.001, -0.002);
    reg.sigma.resize(2, 2);
    reg.sigma << 0.01, 0.004, 0.0, 0.02;
    const MarketModel m({reg}, 0.0, 0.0);
    const Eigen::MatrixXd cov_true = reg.sigma * reg.sigma.transpose();

    const long steps = 1000000;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd noise(steps, 2);
    for (long i = 0; i < steps; ++i) {
        noise(i, 0) = gauss(rng);
        noise(i, 1) = gauss(rng);
    }
    const Eigen::MatrixXd eta = simulate_returns(m, RegimeSequence(steps, 1), noise);
    const Eigen::RowVectorXd mean = eta.colwise().mean();
    const Eigen::MatrixXd centered = eta.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(steps - 1);

    for (int i = 0; i < 2; ++i) {
        const double se = std::sqrt(cov_true(i, i) / double(steps));
        CHECK(std::abs(mean(i) - reg.mu(i)) < 3.0 * se);
        for (int j = 0; j < 2; ++j) {
            // variance of a product of two joint normals, conservative bound
            const double se_cov = 2.0 * std::sqrt(cov_true(i, i) * cov_true(j, j) / double(steps));
            CHECK(std::abs(cov(i, j) - cov_true(i, j)) < 3.0 * se_cov);
        }
    }
}

TEST_CASE("permuting noise channels with sigma columns leaves moments unchanged") {
    RegimeParameters reg;
    reg.mu = Eigen::Vector2d(0.001, 0.002);
    reg.sigma.resize(2, 2);
    reg.sigma << 0.01, 0.003, 0.002, 0.02;
    RegimeParameters permuted = reg;
    permuted.sigma.col(0).swap(permuted.sigma.col(1));

    const MarketModel m({reg}, 0.0, 0.0);
    const MarketModel mp({permuted}, 0.0, 0.0);

    const long steps = 100000;
    std::mt19937_64 rng(15);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd noise(steps, 2);
    for (long i = 0; i < steps; ++i) {
        noise(i, 0) = gauss(rng);
        noise(i, 1) = gauss(rng);
    }
    Eigen::MatrixXd swapped = noise;
    swapped.col(0).swap(swapped.col(1));

    const Eigen::MatrixXd eta = simulate_returns(m, RegimeSequence(steps, 1), noise);
    const Eigen::MatrixXd etap = simulate_returns(mp, RegimeSequence(steps, 1), swapped);
    CHECK((eta - etap).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("wealth step substitutions") {
    const MarketModel m = one_regime(0.0, 0.0);
    AllocationVector u(2);
    u << 0.5, 0.0;
    CHECK(wealth_step(m, 1.0, u, Eigen::VectorXd::Constant(1, 0.02)) ==
          doctest::Approx(1.01).epsilon(1e-14));

    const MarketModel rates = one_regime(0.0, 0.0, 0.0001, 0.0002);
    CHECK(wealth_step(rates, 1.0, AllocationVector::Zero(2), Eigen::VectorXd::Zero(1)) ==
          doctest::Approx(1.0001).epsilon(1e-14));

    AllocationVector borrowed(2);
    borrowed << 0.5, 0.2;
    CHECK(wealth_step(rates, 1.0, borrowed, Eigen::VectorXd::Constant(1, 0.01)) ==
          doctest::Approx(1.00503).epsilon(1e-12));

    AllocationVector bad(2);
    bad << std::numeric_limits<double>::quiet_NaN(), 0.0;
    CHECK_THROWS_AS(wealth_step(m, 1.0, bad, Eigen::VectorXd::Zero(1)), std::invalid_argument);
}

TEST_CASE("risk-free remainder") {
    AllocationVector u(2);
    u << 0.5, 0.0;
    CHECK(riskfree_allocation(1.0, u) == doctest::Approx(0.5));
    CHECK(riskfree_allocation(2.5, AllocationVector::Zero(3)) == doctest::Approx(2.5));
    u << 1.5, 0.8;
    CHECK(riskfree_allocation(1.0, u) == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("gross and net wealth forms agree") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + static_cast<int>(rng() % 4);
        RegimeParameters reg;
        reg.mu = Eigen::VectorXd::Zero(n);
        reg.sigma = Eigen::MatrixXd::Zero(n, n);
        const double r1 = 0.0001 * std::abs(unit(rng));
        const MarketModel m({reg}, r1, r1 + 0.0001);

        const double V = 1.0 + std::abs(unit(rng));
        AllocationVector u(n + 1);
        for (int i = 0; i <= n; ++i) u(i) = unit(rng);
        u(n) = std::abs(u(n));
        Eigen::VectorXd eta(n);
        for (int i = 0; i < n; ++i) eta(i) = 0.05 * unit(rng);

        // gross form: per-asset growth plus risk-free and borrowing legs
        const double u0 = riskfree_allocation(V, u);
        double gross = (1.0 + m.lend_rate()) * u0 - (1.0 + m.borrow_rate()) * u(n);
        for (int i = 0; i < n; ++i) gross += (1.0 + eta(i)) * u(i);

        CHECK(gross == doctest::Approx(wealth_step(m, V, u, eta)).epsilon(1e-12));
        // self-financing identity
        CHECK(u.head(n).sum() + u0 - u(n) == doctest::Approx(V).epsilon(1e-12));
    }
}

}  // TEST_SUITE
