#include "mpcport/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "mpcport/errors.hpp"
#include "mpcport/synthetic.hpp"

namespace mpcport::oracle {

namespace {

int initial_state(const RegimeIndicator& theta, std::mt19937_64& rng) {
    const int onehot = theta.observed_state();
    if (onehot > 0) return onehot;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cum = 0.0;
    for (int i = 0; i < theta.size(); ++i) {
        cum += theta.theta()(i);
        if (u < cum) return i + 1;
    }
    return theta.size();
}

}  // namespace

StackedPrediction sample_stacked(const TransitionMatrix& chain, const RegimeIndicator& theta,
                                 const MarketModel& model, const PredictionConfig& cfg, int k,
                                 std::mt19937_64& rng) {
    const int v = chain.num_regimes();
    if (v != theta.size() || v != model.num_regimes()) {
        throw std::invalid_argument("sample_stacked: regime dimension mismatch");
    }
    const int n = model.num_assets();
    const int m = cfg.horizon;
    const int d = n + 1;
    const int M = m * d;
    const double A = 1.0 + model.lend_rate();

    StackedPrediction sp;
    sp.psi.resize(m);
    for (int i = 1; i <= m; ++i) sp.psi(i - 1) = std::pow(A, i);

    sp.path.resize(static_cast<std::size_t>(m));
    int state = initial_state(theta, rng);
    for (int t = 0; t < m; ++t) {
        state = sample_transition(chain, state, rng);
        sp.path[static_cast<std::size_t>(t)] = state;
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    sp.noise.resize(m, n);
    for (int t = 0; t < m; ++t) {
        for (int j = 0; j < n; ++j) sp.noise(t, j) = gauss(rng);
    }

    sp.xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * v);
    for (int t = 0; t < m; ++t) {
        sp.xi(static_cast<Eigen::Index>(t) * v + sp.path[static_cast<std::size_t>(t)] - 1) = 1.0;
    }

    sp.phi.assign(static_cast<std::size_t>(n) + 1, Eigen::MatrixXd::Zero(m, M));
    for (int j = 0; j <= n; ++j) {
        auto& phi = sp.phi[static_cast<std::size_t>(j)];
        for (int t = 1; t <= m; ++t) {
            const int q = sp.path[static_cast<std::size_t>(t - 1)];
            const Eigen::RowVectorXd b = (j == 0) ? b0_row(model, q) : bj_row(model, q, j);
            for (int i = t; i <= m; ++i) {
                phi.block(i - 1, (t - 1) * d, 1, d) = std::pow(A, i - t) * b;
            }
        }
    }

    sp.delta = Eigen::MatrixXd::Zero(M, M);
    for (int i = 0; i < m; ++i) {
        sp.delta.block(i * d, i * d, d, d) = cfg.control_cost(k, i);
    }
    sp.delta1.resize(m);
    for (int t = 1; t <= m; ++t) sp.delta1(t - 1) = r1_coefficient(cfg, k, t);
    return sp;
}

Eigen::VectorXd stacked_wealths(const StackedPrediction& sp, double wealth,
                                const Eigen::VectorXd& controls) {
    const auto m = sp.psi.size();
    const auto M = sp.phi.front().cols();
    if (controls.size() != M) {
        throw std::invalid_argument("stacked_wealths: control vector has wrong length");
    }
    const auto n = static_cast<Eigen::Index>(sp.phi.size()) - 1;
    const auto d = M / m;
    Eigen::VectorXd x = sp.psi * wealth + sp.phi[0] * controls;
    Eigen::VectorXd scaled(M);
    for (Eigen::Index j = 1; j <= n; ++j) {
        for (Eigen::Index t = 0; t < m; ++t) {
            scaled.segment(t * d, d) = sp.noise(t, j - 1) * controls.segment(t * d, d);
        }
        x += sp.phi[static_cast<std::size_t>(j)] * scaled;
    }
    return x;
}

namespace {

struct StreamAccumulator {
    Eigen::MatrixXd h_sum, h_sumsq;
    Eigen::RowVectorXd g_sum, g_sumsq, f_sum, f_sumsq;
    Eigen::MatrixXd xi_sum;  // m x v

    void init(int m, int v, int M) {
        h_sum = Eigen::MatrixXd::Zero(M, M);
        h_sumsq = Eigen::MatrixXd::Zero(M, M);
        g_sum = Eigen::RowVectorXd::Zero(M);
        g_sumsq = Eigen::RowVectorXd::Zero(M);
        f_sum = Eigen::RowVectorXd::Zero(M);
        f_sumsq = Eigen::RowVectorXd::Zero(M);
        xi_sum = Eigen::MatrixXd::Zero(m, v);
    }
};

void run_stream(const TransitionMatrix& chain, const RegimeIndicator& theta,
                const MarketModel& model, const PredictionConfig& cfg, int k, long count,
                std::uint64_t seed, StreamAccumulator& acc) {
    const int v = chain.num_regimes();
    const int n = model.num_assets();
    const int m = cfg.horizon;
    const int d = n + 1;
    const int M = m * d;
    acc.init(m, v, M);
    std::mt19937_64 rng(seed);

    Eigen::MatrixXd h_s(M, M);
    Eigen::MatrixXd phi_scaled(m, M);
    for (long s = 0; s < count; ++s) {
        const StackedPrediction sp = sample_stacked(chain, theta, model, cfg, k, rng);
        h_s.noalias() = sp.phi[0].transpose() * sp.phi[0];
        for (int j = 1; j <= n; ++j) {
            // diag{W_j} scales control block t by the draw w_j(k+t) on both sides.
            for (int t = 0; t < m; ++t) {
                phi_scaled.middleCols(t * d, d) =
                    sp.noise(t, j - 1) * sp.phi[static_cast<std::size_t>(j)].middleCols(t * d, d);
            }
            h_s.noalias() += phi_scaled.transpose() * phi_scaled;
        }
        const Eigen::RowVectorXd g_s = sp.psi.transpose() * sp.phi[0];
        const Eigen::RowVectorXd f_s = sp.delta1 * sp.phi[0];

        acc.h_sum += h_s;
        acc.h_sumsq += h_s.cwiseProduct(h_s);
        acc.g_sum += g_s;
        acc.g_sumsq += g_s.cwiseProduct(g_s);
        acc.f_sum += f_s;
        acc.f_sumsq += f_s.cwiseProduct(f_s);
        for (int t = 0; t < m; ++t) {
            acc.xi_sum(t, sp.path[static_cast<std::size_t>(t)] - 1) += 1.0;
        }
    }
}

template <typename Mat>
Mat standard_error(const Mat& sum, const Mat& sumsq, long count) {
    const double nn = static_cast<double>(count);
    Mat var = (sumsq - sum.cwiseProduct(sum) / nn) / (nn - 1.0);
    return (var.cwiseMax(0.0) / nn).cwiseSqrt();
}

}  // namespace

McBlocks mc_blocks(const TransitionMatrix& chain, const RegimeIndicator& theta,
                   const MarketModel& model, const PredictionConfig& cfg, int k, long samples,
                   std::uint64_t seed, int streams) {
    if (samples < 10000 || streams < 1) {
        throw std::invalid_argument("mc_blocks: need samples >= 1e4 and streams >= 1");
    }
    if (chain.num_regimes() != theta.size() || chain.num_regimes() != model.num_regimes()) {
        throw std::invalid_argument("mc_blocks: regime dimension mismatch");
    }
    const int m = cfg.horizon;
    const int v = chain.num_regimes();
    const int n = model.num_assets();
    const int M = m * (n + 1);

    std::vector<StreamAccumulator> accs(static_cast<std::size_t>(streams));
    std::vector<long> counts(static_cast<std::size_t>(streams), samples / streams);
    for (int s = 0; s < samples % streams; ++s) ++counts[static_cast<std::size_t>(s)];

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(streams)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int s = w; s < streams; s += workers) {
                run_stream(chain, theta, model, cfg, k, counts[static_cast<std::size_t>(s)],
                           seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(s + 1),
                           accs[static_cast<std::size_t>(s)]);
            }
        });
    }
    for (auto& t : pool) t.join();

    StreamAccumulator total;
    total.init(m, v, M);
    for (const auto& acc : accs) {
        total.h_sum += acc.h_sum;
        total.h_sumsq += acc.h_sumsq;
        total.g_sum += acc.g_sum;
        total.g_sumsq += acc.g_sumsq;
        total.f_sum += acc.f_sum;
        total.f_sumsq += acc.f_sumsq;
        total.xi_sum += acc.xi_sum;
    }

    McBlocks out;
    out.samples = samples;
    const double nn = static_cast<double>(samples);
    out.h = total.h_sum / nn;
    for (int i = 0; i < m; ++i) {
        out.h.block(i * (n + 1), i * (n + 1), n + 1, n + 1) += cfg.control_cost(k, i);
    }
    out.h_se = standard_error(total.h_sum, total.h_sumsq, samples);
    out.g = total.g_sum / nn;
    out.g_se = standard_error(total.g_sum, total.g_sumsq, samples);
    out.f = total.f_sum / nn;
    out.f_se = standard_error(total.f_sum, total.f_sumsq, samples);
    out.mean_indicator = total.xi_sum / nn;
    return out;
}

Eigen::VectorXd grid_argmin(const QuadraticProgram& qp, int resolution) {
    const auto M = qp.hessian.rows();
    if (resolution < 2) throw std::invalid_argument("grid_argmin: resolution must be >= 2");

    // Box to search: singleton constraint rows give exact variable bounds;
    // anything unbounded gets a window around the unconstrained minimizer,
    // computed by a direct solve (independent of the active-set path).
    const Eigen::VectorXd free_min = qp.hessian.ldlt().solve(-0.5 * qp.linear);
    const double span = 1.0 + 2.0 * std::max(1.0, free_min.lpNorm<Eigen::Infinity>());
    Eigen::VectorXd lo = free_min.array() - span;
    Eigen::VectorXd hi = free_min.array() + span;
    for (Eigen::Index j = 0; j < qp.constraint_operator.rows(); ++j) {
        Eigen::Index nz = -1;
        bool singleton = true;
        for (Eigen::Index i = 0; i < M; ++i) {
            if (qp.constraint_operator(j, i) != 0.0) {
                if (nz >= 0) {
                    singleton = false;
                    break;
                }
                nz = i;
            }
        }
        if (!singleton || nz < 0) continue;
        const double s = qp.constraint_operator(j, nz);
        double a = qp.lower(j) / s, b = qp.upper(j) / s;
        if (s < 0.0) std::swap(a, b);
        if (std::isfinite(a)) lo(nz) = std::max(lo(nz), a);
        if (std::isfinite(b)) hi(nz) = std::min(hi(nz), b);
    }

    auto feasible = [&](const Eigen::VectorXd& x) {
        for (Eigen::Index j = 0; j < qp.constraint_operator.rows(); ++j) {
            const double val = qp.constraint_operator.row(j).dot(x);
            const double tol = 1e-9 * std::max(1.0, std::abs(val));
            if (val < qp.lower(j) - tol || val > qp.upper(j) + tol) return false;
        }
        return true;
    };
    auto objective = [&](const Eigen::VectorXd& x) {
        return x.dot(qp.hessian * x) + qp.linear.dot(x);
    };

    Eigen::VectorXd best;
    double best_obj = std::numeric_limits<double>::infinity();
    const double grid_points = std::pow(static_cast<double>(resolution), static_cast<double>(M));
    if (grid_points <= 2e6) {
        std::vector<int> idx(static_cast<std::size_t>(M), 0);
        Eigen::VectorXd x(M);
        const long total = static_cast<long>(grid_points);
        for (long it = 0; it < total; ++it) {
            for (Eigen::Index i = 0; i < M; ++i) {
                x(i) = lo(i) + (hi(i) - lo(i)) * idx[static_cast<std::size_t>(i)] /
                                   (resolution - 1);
            }
            if (feasible(x)) {
                const double obj = objective(x);
                if (obj < best_obj) {
                    best_obj = obj;
                    best = x;
                }
            }
            for (Eigen::Index i = 0; i < M; ++i) {
                if (++idx[static_cast<std::size_t>(i)] < resolution) break;
                idx[static_cast<std::size_t>(i)] = 0;
            }
        }
    } else {
        std::mt19937_64 rng(20240601u);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Eigen::VectorXd x(M);
        for (long it = 0; it < 1000000; ++it) {
            for (Eigen::Index i = 0; i < M; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
            if (feasible(x)) {
                const double obj = objective(x);
                if (obj < best_obj) {
                    best_obj = obj;
                    best = x;
                }
            }
        }
    }
    if (best.size() == 0) {
        throw SolverError("grid_argmin: no feasible point found in the search box");
    }
    return best;
}

}  // namespace mpcport::oracle
