#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>

#include "mpcport/errors.hpp"
#include "mpcport/qp_solver.hpp"

using namespace mpcport;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd random_spd(int m, std::mt19937_64& rng, double ridge = 0.5) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) B(i, j) = gauss(rng);
    }
    return B * B.transpose() + ridge * Eigen::MatrixXd::Identity(m, m);
}

struct RandomBox {
    Eigen::MatrixXd A;
    Eigen::VectorXd lower, upper;
};

// Box constraints around the origin so 0 is always feasible.
RandomBox random_box(int m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.05, 1.5);
    RandomBox box;
    box.A = Eigen::MatrixXd::Identity(m, m);
    box.lower.resize(m);
    box.upper.resize(m);
    for (int i = 0; i < m; ++i) {
        box.lower(i) = -unit(rng);
        box.upper(i) = unit(rng);
    }
    return box;
}

double objective(const Eigen::MatrixXd& H, const Eigen::VectorXd& c, const Eigen::VectorXd& x) {
    return x.dot(H * x) + c.dot(x);
}

}  // namespace

TEST_SUITE("qp_solver") {

TEST_CASE("unconstrained quadratic") {
    Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd c(2);
    c << -2.0, -2.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -kInf);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, kInf);

    const QPSolution sol = solve(H, c, A, lo, hi);
    CHECK(sol.minimizer(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.minimizer(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(sol.active_set.empty());
    CHECK(sol.kkt_residual < 1e-9);

    // no constraint rows at all
    const QPSolution empty = solve(H, c, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0),
                                   Eigen::VectorXd(0));
    CHECK((empty.minimizer - sol.minimizer).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("clamped box") {
    Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd c(2);
    c << -2.0, -2.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 0.25);

    const QPSolution sol = solve(H, c, A, lo, hi);
    CHECK(sol.minimizer(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sol.minimizer(1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sol.active_set.size() == 2);
    for (const auto& ac : sol.active_set) {
        CHECK(ac.side == BoundSide::Upper);
        CHECK(ac.multiplier > 0.0);
    }
    CHECK(sol.kkt_residual < 1e-9);
}

TEST_CASE("two-sided row binding at the lower side") {
    Eigen::MatrixXd H(1, 1);
    H << 1.0;
    Eigen::VectorXd c(1);
    c << 4.0;  // unconstrained minimum at -2
    Eigen::MatrixXd A(1, 1);
    A << 1.0;
    Eigen::VectorXd lo(1), hi(1);
    lo << -1.0;
    hi << 3.0;
    const QPSolution sol = solve(H, c, A, lo, hi);
    CHECK(sol.minimizer(0) == doctest::Approx(-1.0));
    REQUIRE(sol.active_set.size() == 1);
    CHECK(sol.active_set[0].side == BoundSide::Lower);
    CHECK(sol.lambda_lower(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.kkt_residual < 1e-9);
}

TEST_CASE("kkt residual unit cases") {
    Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd c(2);
    c << -2.0, -2.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -kInf);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, kInf);
    const Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);

    Eigen::VectorXd star(2);
    star << 0.5, 0.5;
    CHECK(kkt_residual(H, c, A, lo, hi, star, zero2, zero2) < 1e-12);

    // perturbing the optimum grows the residual like |2 H delta|
    Eigen::VectorXd delta(2);
    delta << 1e-3, -5e-4;
    const double res = kkt_residual(H, c, A, lo, hi, star + delta, zero2, zero2);
    CHECK(res == doctest::Approx((2.0 * H * delta).lpNorm<Eigen::Infinity>()).epsilon(1e-9));
}

TEST_CASE("random instances beat a feasible sample cloud and satisfy KKT") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int rep = 0; rep < 60; ++rep) {
        const int m = 2 + static_cast<int>(rng() % 5);
        const Eigen::MatrixXd H = random_spd(m, rng);
        Eigen::VectorXd c(m);
        for (int i = 0; i < m; ++i) c(i) = 2.0 * unit(rng);
        const RandomBox box = random_box(m, rng);

        const QPSolution sol = solve(H, c, box.A, box.lower, box.upper);
        CHECK(sol.kkt_residual < 1e-9);
        for (int i = 0; i < m; ++i) {
            CHECK(sol.minimizer(i) >= box.lower(i) - 1e-9);
            CHECK(sol.minimizer(i) <= box.upper(i) + 1e-9);
        }
        // feasible samples can never do better
        Eigen::VectorXd x(m);
        for (int s = 0; s < 2000; ++s) {
            for (int i = 0; i < m; ++i) {
                x(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * (0.5 + 0.5 * unit(rng));
            }
            CHECK(sol.objective <= objective(H, c, x) + 1e-9);
        }
    }
}

TEST_CASE("one instance against a million-point feasible cloud") {
    std::mt19937_64 rng(40);
    const int m = 4;
    const Eigen::MatrixXd H = random_spd(m, rng);
    Eigen::VectorXd c(m);
    c << -1.5, 0.7, 2.2, -0.4;
    const RandomBox box = random_box(m, rng);
    const QPSolution sol = solve(H, c, box.A, box.lower, box.upper);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd x(m);
    double best = std::numeric_limits<double>::infinity();
    for (long s = 0; s < 1000000; ++s) {
        for (int i = 0; i < m; ++i) {
            x(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * unit(rng);
        }
        best = std::min(best, objective(H, c, x));
    }
    CHECK(sol.objective <= best + 1e-9);
    CHECK(sol.objective >= best - 0.1);  // the cloud comes reasonably close from above
}

TEST_CASE("bit-identical solutions for identical inputs") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd H = random_spd(4, rng);
    Eigen::VectorXd c(4);
    c << 1.0, -2.0, 0.5, 3.0;
    const RandomBox box = random_box(4, rng);

    const QPSolution a = solve(H, c, box.A, box.lower, box.upper);
    const QPSolution b = solve(H, c, box.A, box.lower, box.upper);
    CHECK(std::memcmp(a.minimizer.data(), b.minimizer.data(), 4 * sizeof(double)) == 0);
    CHECK(a.objective == b.objective);
    CHECK(a.iterations == b.iterations);
    REQUIRE(a.active_set.size() == b.active_set.size());
    for (std::size_t i = 0; i < a.active_set.size(); ++i) {
        CHECK(a.active_set[i].row == b.active_set[i].row);
        CHECK(a.active_set[i].multiplier == b.active_set[i].multiplier);
    }
}

TEST_CASE("shrinking the feasible box never improves the objective") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int rep = 0; rep < 40; ++rep) {
        const int m = 2 + static_cast<int>(rng() % 4);
        const Eigen::MatrixXd H = random_spd(m, rng);
        Eigen::VectorXd c(m);
        for (int i = 0; i < m; ++i) c(i) = 3.0 * unit(rng);
        RandomBox outer = random_box(m, rng);
        RandomBox inner = outer;
        inner.lower *= 0.5;
        inner.upper *= 0.5;

        const double wide = solve(H, c, outer.A, outer.lower, outer.upper).objective;
        const double tight = solve(H, c, inner.A, inner.lower, inner.upper).objective;
        CHECK(tight >= wide - 1e-10);
    }
}

TEST_CASE("scaling H and c leaves the minimizer unchanged") {
    std::mt19937_64 rng(123);
    const Eigen::MatrixXd H = random_spd(3, rng);
    Eigen::VectorXd c(3);
    c << -1.0, 2.0, 0.3;
    const RandomBox box = random_box(3, rng);

    const QPSolution base = solve(H, c, box.A, box.lower, box.upper);
    for (double s : {0.5, 3.0, 250.0}) {
        const QPSolution scaled = solve(s * H, s * c, box.A, box.lower, box.upper);
        CHECK((scaled.minimizer - base.minimizer).lpNorm<Eigen::Infinity>() < 1e-8);
        CHECK(scaled.objective == doctest::Approx(s * base.objective).epsilon(1e-9));
    }
}

TEST_CASE("active constraints are tight, inactive multipliers zero") {
    std::mt19937_64 rng(321);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int rep = 0; rep < 40; ++rep) {
        const int m = 2 + static_cast<int>(rng() % 4);
        const Eigen::MatrixXd H = random_spd(m, rng);
        Eigen::VectorXd c(m);
        for (int i = 0; i < m; ++i) c(i) = 3.0 * unit(rng);
        const RandomBox box = random_box(m, rng);
        const QPSolution sol = solve(H, c, box.A, box.lower, box.upper);

        std::vector<bool> active_row(static_cast<std::size_t>(m), false);
        for (const auto& ac : sol.active_set) {
            active_row[static_cast<std::size_t>(ac.row)] = true;
            const double bound =
                (ac.side == BoundSide::Upper) ? box.upper(ac.row) : box.lower(ac.row);
            CHECK(std::abs(box.A.row(ac.row).dot(sol.minimizer) - bound) < 1e-9);
        }
        for (int j = 0; j < m; ++j) {
            if (!active_row[static_cast<std::size_t>(j)]) {
                CHECK(sol.lambda_lower(j) == 0.0);
                CHECK(sol.lambda_upper(j) == 0.0);
            }
        }
    }
}

TEST_CASE("zero constraint rows are tolerated") {
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd c(2);
    c << -1.0, -1.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 2);
    A.topLeftCorner(2, 2).setIdentity();
    Eigen::VectorXd lo(4), hi(4);
    lo << -1.0, -1.0, 0.0, 0.0;
    hi << 0.2, 0.2, 0.0, 0.0;
    const QPSolution sol = solve(H, c, A, lo, hi);
    CHECK(sol.minimizer(0) == doctest::Approx(0.2));
    CHECK(sol.minimizer(1) == doctest::Approx(0.2));
    CHECK(sol.kkt_residual < 1e-9);
}

TEST_CASE("infeasible and invalid problems are reported") {
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);

    // crossed bounds on one row
    Eigen::VectorXd lo(2), hi(2);
    lo << 0.5, 0.0;
    hi << -0.5, 1.0;
    CHECK_THROWS_AS(solve(H, c, A, lo, hi), SolverError);

    // contradictory coupled rows: x0 <= -1 and x0 + x1 >= 1 with x1 <= 0
    Eigen::MatrixXd A2(3, 2);
    A2 << 1, 0, 1, 1, 0, 1;
    Eigen::VectorXd lo2(3), hi2(3);
    lo2 << -kInf, 1.0, -kInf;
    hi2 << -1.0, kInf, 0.0;
    CHECK_THROWS_AS(solve(H, c, A2, lo2, hi2), SolverError);

    // indefinite H
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(solve(bad, c, A, Eigen::VectorXd::Constant(2, -1.0),
                          Eigen::VectorXd::Constant(2, 1.0)),
                    SolverError);

    // asymmetric H is a usage error
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(solve(asym, c, A, Eigen::VectorXd::Constant(2, -1.0),
                          Eigen::VectorXd::Constant(2, 1.0)),
                    std::invalid_argument);

    // so is an empty problem
    CHECK_THROWS_AS(solve(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), Eigen::MatrixXd(0, 0),
                          Eigen::VectorXd(0), Eigen::VectorXd(0)),
                    std::invalid_argument);
}

TEST_CASE("feasibility search when the origin is excluded") {
    // box away from the origin, reachable through the singleton fast path
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd lo(2), hi(2);
    lo << 1.0, 2.0;
    hi << 2.0, 3.0;
    const QPSolution sol = solve(H, c, A, lo, hi);
    CHECK(sol.minimizer(0) == doctest::Approx(1.0));
    CHECK(sol.minimizer(1) == doctest::Approx(2.0));
    CHECK(sol.kkt_residual < 1e-9);

    // coupled rows force the elastic search: x0 + x1 >= 3 with x <= 2
    Eigen::MatrixXd A2(3, 2);
    A2 << 1, 0, 0, 1, 1, 1;
    Eigen::VectorXd lo2(3), hi2(3);
    lo2 << -kInf, -kInf, 3.0;
    hi2 << 2.0, 2.0, kInf;
    Eigen::VectorXd c2(2);
    c2 << 1.0, 1.0;
    const QPSolution sol2 = solve(H, c2, A2, lo2, hi2);
    CHECK(sol2.minimizer(0) + sol2.minimizer(1) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(sol2.kkt_residual < 1e-9);
    // symmetric problem, symmetric optimum
    CHECK(sol2.minimizer(0) == doctest::Approx(1.5).epsilon(1e-8));
}

TEST_CASE("warm start reproduces the cold-start solution") {
    std::mt19937_64 rng(55);
    const Eigen::MatrixXd H = random_spd(4, rng);
    Eigen::VectorXd c(4);
    c << -3.0, 1.0, 2.0, -0.5;
    const RandomBox box = random_box(4, rng);

    const QPSolution cold = solve(H, c, box.A, box.lower, box.upper);
    WarmStart warm;
    warm.point = cold.minimizer;
    for (const auto& ac : cold.active_set) warm.working_set.emplace_back(ac.row, ac.side);
    const QPSolution hot = solve(H, c, box.A, box.lower, box.upper, 1e-9, &warm);
    CHECK((hot.minimizer - cold.minimizer).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(hot.iterations <= cold.iterations);
}

}  // TEST_SUITE
