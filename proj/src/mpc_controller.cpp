#include "mpcport/mpc_controller.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mpcport/errors.hpp"

namespace mpcport {

PredictionConfig make_constant_config(int horizon, int dim, double r_diag, double rho,
                                      double v0_init, double growth) {
    if (horizon < 1 || dim < 1) {
        throw std::invalid_argument("make_constant_config: horizon and dim must be >= 1");
    }
    PredictionConfig cfg;
    cfg.horizon = horizon;
    cfg.control_cost = [r_diag, dim](int, int) {
        return Eigen::MatrixXd(r_diag * Eigen::MatrixXd::Identity(dim, dim));
    };
    cfg.rho = [rho](int, int) { return rho; };
    cfg.benchmark = [v0_init, growth](int k) { return v0_init * std::pow(1.0 + growth, k); };
    return cfg;
}

ConstraintSpec ConstraintSpec::uniform(int n, double beta_all, double gamma_asset,
                                       double gamma_riskfree, double gamma_borrow) {
    ConstraintSpec spec;
    spec.beta = Eigen::VectorXd::Constant(n, beta_all);
    spec.gamma = Eigen::VectorXd(n + 2);
    spec.gamma.head(n).setConstant(gamma_asset);
    spec.gamma(n) = gamma_riskfree;
    spec.gamma(n + 1) = gamma_borrow;
    return spec;
}

void ConstraintSpec::validate(int n) const {
    if (beta.size() != n || gamma.size() != n + 2) {
        throw ConfigError("ConstraintSpec: beta must have n entries, gamma n+2");
    }
    for (int i = 0; i < n; ++i) {
        if (beta(i) > gamma(i)) {
            throw ConfigError("ConstraintSpec: beta_" + std::to_string(i + 1) +
                              " exceeds gamma_" + std::to_string(i + 1));
        }
    }
    if (gamma(n) < 0.0 || gamma(n + 1) < 0.0) {
        throw ConfigError("ConstraintSpec: risk-free and borrowing caps must be >= 0");
    }
}

double r1_coefficient(const PredictionConfig& cfg, int k, int t) {
    if (t < 1 || t > cfg.horizon) {
        throw std::invalid_argument("r1_coefficient: t outside 1..m");
    }
    const double v0 = cfg.benchmark(k + t);
    if (!(v0 > 0.0)) {
        throw std::invalid_argument("r1_coefficient: benchmark must be strictly positive");
    }
    return 2.0 * v0 + cfg.rho(k, t);
}

BlockRecursionState q_recursions(const PredictionConfig& cfg, const MarketModel& model,
                                 int k) {
    const int m = cfg.horizon;
    BlockRecursionState rec;
    rec.a = 1.0 + model.lend_rate();
    rec.r1_coeffs.resize(static_cast<std::size_t>(m));
    for (int t = 1; t <= m; ++t) {
        rec.r1_coeffs[static_cast<std::size_t>(t - 1)] = r1_coefficient(cfg, k, t);
    }
    rec.q1.resize(static_cast<std::size_t>(m) + 1);
    rec.q1[0] = 1.0;
    for (int t = 1; t <= m; ++t) {
        rec.q1[static_cast<std::size_t>(t)] = rec.a * rec.a * rec.q1[static_cast<std::size_t>(t - 1)] + 1.0;
    }
    rec.q2.resize(static_cast<std::size_t>(m));
    rec.q2[0] = rec.r1_coeffs[static_cast<std::size_t>(m - 1)];
    for (int t = 1; t < m; ++t) {
        rec.q2[static_cast<std::size_t>(t)] =
            rec.a * rec.q2[static_cast<std::size_t>(t - 1)] + rec.r1_coeffs[static_cast<std::size_t>(m - t - 1)];
    }
    return rec;
}

namespace {

void check_regime_dims(const TransitionMatrix& chain, const RegimeIndicator& theta,
                       const MarketModel& model) {
    if (chain.num_regimes() != theta.size() || chain.num_regimes() != model.num_regimes()) {
        throw std::invalid_argument("mpc_controller: chain, indicator and model disagree on "
                                    "the number of regimes");
    }
}

/// Shared precomputation for H, G, F: regime distributions over the horizon
/// and the per-regime B rows.
struct HorizonData {
    std::vector<Eigen::VectorXd> dist;  // P^t theta, t = 0..m
    std::vector<Eigen::MatrixXd> ppow;  // P^s, s = 0..m
    Eigen::MatrixXd b0mat;              // v x (n+1), row q-1 = B0 of regime q
    std::vector<Eigen::MatrixXd> sum_btb;  // per regime, sum_j Bj^T Bj including j = 0
};

HorizonData horizon_data(const TransitionMatrix& chain, const RegimeIndicator& theta,
                         const MarketModel& model, int m) {
    const int v = chain.num_regimes();
    const int n = model.num_assets();
    HorizonData hd;
    hd.dist.resize(static_cast<std::size_t>(m) + 1);
    hd.ppow.resize(static_cast<std::size_t>(m) + 1);
    hd.dist[0] = theta.theta();
    hd.ppow[0] = Eigen::MatrixXd::Identity(v, v);
    for (int t = 1; t <= m; ++t) {
        hd.dist[static_cast<std::size_t>(t)] = chain.entries() * hd.dist[static_cast<std::size_t>(t - 1)];
        hd.ppow[static_cast<std::size_t>(t)] = chain.entries() * hd.ppow[static_cast<std::size_t>(t - 1)];
    }
    hd.b0mat.resize(v, n + 1);
    hd.sum_btb.resize(static_cast<std::size_t>(v));
    for (int q = 1; q <= v; ++q) {
        const Eigen::RowVectorXd b0 = b0_row(model, q);
        hd.b0mat.row(q - 1) = b0;
        Eigen::MatrixXd acc = b0.transpose() * b0;
        for (int j = 1; j <= n; ++j) {
            const Eigen::RowVectorXd bj = bj_row(model, q, j);
            acc += bj.transpose() * bj;
        }
        hd.sum_btb[static_cast<std::size_t>(q - 1)] = std::move(acc);
    }
    return hd;
}

Eigen::MatrixXd checked_control_cost(const PredictionConfig& cfg, int k, int i, int dim) {
    Eigen::MatrixXd R = cfg.control_cost(k, i);
    if (R.rows() != dim || R.cols() != dim) {
        throw std::invalid_argument("control_cost must be (n+1)x(n+1)");
    }
    if ((R - R.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, R.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("control_cost must be symmetric");
    }
    if (Eigen::LLT<Eigen::MatrixXd>(R).info() != Eigen::Success) {
        throw std::invalid_argument("control_cost must be positive definite");
    }
    return R;
}

}  // namespace

Eigen::MatrixXd build_H(const TransitionMatrix& chain, const RegimeIndicator& theta,
                        const MarketModel& model, const PredictionConfig& cfg, int k) {
    check_regime_dims(chain, theta, model);
    const int v = chain.num_regimes();
    const int n = model.num_assets();
    const int m = cfg.horizon;
    const int d = n + 1;
    const BlockRecursionState rec = q_recursions(cfg, model, k);
    const HorizonData hd = horizon_data(chain, theta, model, m);

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m * d, m * d);
    for (int t = 1; t <= m; ++t) {
        Eigen::MatrixXd blk = checked_control_cost(cfg, k, t - 1, d);
        const double q1 = rec.q1[static_cast<std::size_t>(m - t)];
        for (int q = 0; q < v; ++q) {
            blk += q1 * hd.dist[static_cast<std::size_t>(t)](q) * hd.sum_btb[static_cast<std::size_t>(q)];
        }
        H.block((t - 1) * d, (t - 1) * d, d, d) = blk;
        for (int f = t + 1; f <= m; ++f) {
            // Joint occupancy of (k+t, k+f) weights the excess-return rows.
            const Eigen::MatrixXd joint =
                hd.dist[static_cast<std::size_t>(t)].asDiagonal() *
                hd.ppow[static_cast<std::size_t>(f - t)].transpose();
            const Eigen::MatrixXd cross = std::pow(rec.a, f - t) *
                                          rec.q1[static_cast<std::size_t>(m - f)] *
                                          (hd.b0mat.transpose() * joint * hd.b0mat);
            H.block((t - 1) * d, (f - 1) * d, d, d) = cross;
            H.block((f - 1) * d, (t - 1) * d, d, d) = cross.transpose();
        }
    }
    return H;
}

Eigen::RowVectorXd build_G(const TransitionMatrix& chain, const RegimeIndicator& theta,
                           const MarketModel& model, const PredictionConfig& cfg, int k) {
    check_regime_dims(chain, theta, model);
    const int n = model.num_assets();
    const int m = cfg.horizon;
    const int d = n + 1;
    const BlockRecursionState rec = q_recursions(cfg, model, k);
    const HorizonData hd = horizon_data(chain, theta, model, m);

    Eigen::RowVectorXd G(m * d);
    for (int t = 1; t <= m; ++t) {
        const Eigen::RowVectorXd mean_b0 =
            hd.dist[static_cast<std::size_t>(t)].transpose() * hd.b0mat;
        G.segment((t - 1) * d, d) =
            std::pow(rec.a, t) * rec.q1[static_cast<std::size_t>(m - t)] * mean_b0;
    }
    return G;
}

Eigen::RowVectorXd build_F(const TransitionMatrix& chain, const RegimeIndicator& theta,
                           const MarketModel& model, const PredictionConfig& cfg, int k) {
    check_regime_dims(chain, theta, model);
    const int n = model.num_assets();
    const int m = cfg.horizon;
    const int d = n + 1;
    const BlockRecursionState rec = q_recursions(cfg, model, k);
    const HorizonData hd = horizon_data(chain, theta, model, m);

    Eigen::RowVectorXd F(m * d);
    for (int t = 1; t <= m; ++t) {
        const Eigen::RowVectorXd mean_b0 =
            hd.dist[static_cast<std::size_t>(t)].transpose() * hd.b0mat;
        F.segment((t - 1) * d, d) = rec.q2[static_cast<std::size_t>(m - t)] * mean_b0;
    }
    return F;
}

StackedConstraints build_constraints(const ConstraintSpec& spec, double wealth, int n, int m,
                                     ConstraintMode mode) {
    if (!(wealth > 0.0)) {
        throw std::invalid_argument("build_constraints: wealth must be positive");
    }
    spec.validate(n);
    const int d = n + 1;
    const int rows = n + 2;

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(rows, d);
    S.topLeftCorner(n, n).setIdentity();
    S.row(n).head(n).setConstant(-1.0);
    S(n, n) = 1.0;
    S(n + 1, n) = 1.0;

    Eigen::VectorXd umin(rows), umax(rows);
    umin.head(n) = spec.beta * wealth;
    umin(n) = -wealth;       // risk-free amount >= 0
    umin(n + 1) = 0.0;       // no negative borrowing
    umax.head(n) = spec.gamma.head(n) * wealth;
    umax(n) = spec.gamma(n) * wealth - wealth;
    umax(n + 1) = spec.gamma(n + 1) * wealth;

    StackedConstraints out;
    out.op = Eigen::MatrixXd::Zero(m * rows, m * d);
    out.lower = Eigen::VectorXd::Zero(m * rows);
    out.upper = Eigen::VectorXd::Zero(m * rows);
    const int blocks = (mode == ConstraintMode::FullHorizon) ? m : 1;
    for (int b = 0; b < blocks; ++b) {
        out.op.block(b * rows, b * d, rows, d) = S;
        out.lower.segment(b * rows, rows) = umin;
        out.upper.segment(b * rows, rows) = umax;
    }
    return out;
}

QuadraticProgram assemble_qp(const TransitionMatrix& chain, const RegimeIndicator& theta,
                             const MarketModel& model, const PredictionConfig& cfg,
                             const ConstraintSpec& spec, double wealth, int k,
                             ConstraintMode mode) {
    QuadraticProgram qp;
    qp.hessian = build_H(chain, theta, model, cfg, k);
    const Eigen::RowVectorXd G = build_G(chain, theta, model, cfg, k);
    const Eigen::RowVectorXd F = build_F(chain, theta, model, cfg, k);
    qp.linear = (2.0 * wealth * G - F).transpose();
    StackedConstraints sc =
        build_constraints(spec, wealth, model.num_assets(), cfg.horizon, mode);
    qp.constraint_operator = std::move(sc.op);
    qp.lower = std::move(sc.lower);
    qp.upper = std::move(sc.upper);
    return qp;
}

AllocationVector extract_control(const Eigen::VectorXd& stacked, int n) {
    const int d = n + 1;
    if (stacked.size() < d || stacked.size() % d != 0) {
        throw std::invalid_argument("extract_control: stacked length must be m*(n+1)");
    }
    return stacked.head(d);
}

AllocationVector mpc_step(const TransitionMatrix& chain, const RegimeIndicator& theta,
                          const MarketModel& model, const PredictionConfig& cfg,
                          const ConstraintSpec& spec, double wealth, int k,
                          ConstraintMode mode, const WarmStart* warm_start,
                          QPSolution* solution) {
    const QuadraticProgram qp = assemble_qp(chain, theta, model, cfg, spec, wealth, k, mode);
    QPSolution sol = solve(qp.hessian, qp.linear, qp.constraint_operator, qp.lower, qp.upper,
                           1e-9, warm_start);
    AllocationVector u = extract_control(sol.minimizer, model.num_assets());
    if (solution) *solution = std::move(sol);
    return u;
}

}  // namespace mpcport
