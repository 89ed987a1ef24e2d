#include "mpcport/qp_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpcport/errors.hpp"

namespace mpcport {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct WorkingEntry {
    int row;
    BoundSide side;
};

double bound_scale(double b) {
    return std::isfinite(b) ? std::max(1.0, std::abs(b)) : 1.0;
}

bool point_feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                    const Eigen::VectorXd& upper, const Eigen::VectorXd& x, double tol) {
    const double xn = x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0;
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        const double v = A.row(j).dot(x);
        const double slack_tol = 1e-13 * A.row(j).norm() * (1.0 + xn);
        if (lower(j) > -kInf && v < lower(j) - tol * bound_scale(lower(j)) - slack_tol)
            return false;
        if (upper(j) < kInf && v > upper(j) + tol * bound_scale(upper(j)) + slack_tol)
            return false;
    }
    return true;
}

/// Primal active-set engine. One instance per solve; the caller supplies a
/// feasible starting point.
class ActiveSetSolver {
public:
    ActiveSetSolver(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                    const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                    const Eigen::VectorXd& upper, double tol)
        : H_(H), c_(c), A_(A), lower_(lower), upper_(upper), tol_(tol),
          M_(static_cast<int>(H.rows())), K_(static_cast<int>(A.rows())) {
        H2_ = 2.0 * H_;
        llt_.compute(H2_);
        if (llt_.info() != Eigen::Success) {
            throw SolverError("qp_solver: H is not positive definite");
        }
        row_norm_.resize(K_);
        for (int j = 0; j < K_; ++j) row_norm_(j) = A_.row(j).norm();
        ycache_.assign(static_cast<std::size_t>(K_), Eigen::VectorXd());
    }

    bool feasible(const Eigen::VectorXd& x) const {
        return point_feasible(A_, lower_, upper_, x, tol_);
    }

    QPSolution run(Eigen::VectorXd x, std::vector<WorkingEntry> working) {
        const long cap = 50L * (M_ + K_);
        long iter = 0;
        Eigen::VectorXd p, lam;
        for (;;) {
            if (++iter > cap) {
                throw SolverError("qp_solver: iteration cap " + std::to_string(cap) +
                                  " exceeded");
            }
            subproblem(x, working, p, lam);

            const double step_tol = 1e-11 * (1.0 + x.lpNorm<Eigen::Infinity>());
            if (p.lpNorm<Eigen::Infinity>() <= step_tol) {
                const int drop = multiplier_violation(working, lam);
                if (drop < 0) {
                    return finish(std::move(x), working, lam, static_cast<int>(iter));
                }
                working.erase(working.begin() + drop);
                continue;
            }

            // Ratio test: largest step along p before an inactive constraint blocks.
            double alpha = 1.0;
            int block_row = -1;
            BoundSide block_side = BoundSide::Lower;
            const double pn = p.norm();
            for (int j = 0; j < K_; ++j) {
                if (in_working(working, j)) continue;
                const double d = A_.row(j).dot(p);
                const double dir_tol = 1e-12 * (1.0 + row_norm_(j) * pn);
                double step, bnd;
                BoundSide side;
                if (d > dir_tol && upper_(j) < kInf) {
                    bnd = upper_(j);
                    side = BoundSide::Upper;
                } else if (d < -dir_tol && lower_(j) > -kInf) {
                    bnd = lower_(j);
                    side = BoundSide::Lower;
                } else {
                    continue;
                }
                step = (bnd - A_.row(j).dot(x)) / d;
                if (step < 0.0) step = 0.0;  // already on the bound, round-off aside
                if (step < alpha) {
                    alpha = step;
                    block_row = j;
                    block_side = side;
                }
            }

            x += alpha * p;
            if (block_row >= 0 && alpha < 1.0) {
                working.push_back({block_row, block_side});
            }
        }
    }

private:
    // Equality-constrained step: minimize the quadratic over the working-set
    // subspace via the range-space (projected) system. p is the step from x,
    // lam the working-set multipliers.
    void subproblem(const Eigen::VectorXd& x, const std::vector<WorkingEntry>& working,
                    Eigen::VectorXd& p, Eigen::VectorXd& lam) {
        const Eigen::VectorXd g = H2_ * x + c_;
        const Eigen::VectorXd hg = llt_.solve(g);
        const int w = static_cast<int>(working.size());
        if (w == 0) {
            p = -hg;
            lam.resize(0);
            return;
        }
        Eigen::MatrixXd Y(M_, w);
        Eigen::VectorXd rhs(w);
        for (int i = 0; i < w; ++i) {
            Y.col(i) = cached_solve(working[static_cast<std::size_t>(i)].row);
            rhs(i) = -A_.row(working[static_cast<std::size_t>(i)].row).dot(hg);
        }
        Eigen::MatrixXd Kw(w, w);
        for (int i = 0; i < w; ++i) {
            for (int j = 0; j < w; ++j) {
                Kw(i, j) = A_.row(working[static_cast<std::size_t>(i)].row).dot(Y.col(j));
            }
        }
        Eigen::LLT<Eigen::MatrixXd> lltK(Kw);
        if (lltK.info() != Eigen::Success) {
            throw SolverError("qp_solver: working set became linearly dependent");
        }
        lam = lltK.solve(rhs);
        p = -hg - Y * lam;
    }

    const Eigen::VectorXd& cached_solve(int row) {
        auto& y = ycache_[static_cast<std::size_t>(row)];
        if (y.size() == 0) y = llt_.solve(A_.row(row).transpose());
        return y;
    }

    static bool in_working(const std::vector<WorkingEntry>& working, int row) {
        for (const auto& e : working) {
            if (e.row == row) return true;
        }
        return false;
    }

    // Index of the working-set entry whose multiplier most violates its sign
    // condition, or -1 when all pass. Ties: lowest row, lower side first.
    int multiplier_violation(const std::vector<WorkingEntry>& working,
                             const Eigen::VectorXd& lam) const {
        const double mult_tol = tol_;
        int best = -1;
        double best_viol = mult_tol;
        for (int i = 0; i < static_cast<int>(working.size()); ++i) {
            const auto& e = working[static_cast<std::size_t>(i)];
            const double viol = (e.side == BoundSide::Upper) ? -lam(i) : lam(i);
            if (viol <= best_viol) {
                if (best < 0 || viol < best_viol) continue;
                const auto& b = working[static_cast<std::size_t>(best)];
                const bool wins = e.row < b.row ||
                                  (e.row == b.row && e.side == BoundSide::Lower &&
                                   b.side == BoundSide::Upper);
                if (!wins) continue;
            }
            best = i;
            best_viol = viol;
        }
        return best;
    }

    QPSolution finish(Eigen::VectorXd x, const std::vector<WorkingEntry>& working,
                      const Eigen::VectorXd& lam, int iterations) const {
        QPSolution sol;
        sol.lambda_lower = Eigen::VectorXd::Zero(K_);
        sol.lambda_upper = Eigen::VectorXd::Zero(K_);
        for (int i = 0; i < static_cast<int>(working.size()); ++i) {
            const auto& e = working[static_cast<std::size_t>(i)];
            ActiveConstraint ac;
            ac.row = e.row;
            ac.side = e.side;
            if (e.side == BoundSide::Upper) {
                sol.lambda_upper(e.row) = std::max(0.0, lam(i));
                ac.multiplier = sol.lambda_upper(e.row);
            } else {
                sol.lambda_lower(e.row) = std::max(0.0, -lam(i));
                ac.multiplier = sol.lambda_lower(e.row);
            }
            sol.active_set.push_back(ac);
        }
        std::sort(sol.active_set.begin(), sol.active_set.end(),
                  [](const ActiveConstraint& a, const ActiveConstraint& b) {
                      if (a.row != b.row) return a.row < b.row;
                      return a.side == BoundSide::Lower && b.side == BoundSide::Upper;
                  });
        sol.objective = x.dot(H_ * x) + c_.dot(x);
        sol.kkt_residual = kkt_residual(H_, c_, A_, lower_, upper_, x, sol.lambda_lower,
                                        sol.lambda_upper);
        sol.iterations = iterations;
        sol.minimizer = std::move(x);
        return sol;
    }

    const Eigen::MatrixXd& H_;
    const Eigen::VectorXd& c_;
    const Eigen::MatrixXd& A_;
    const Eigen::VectorXd& lower_;
    const Eigen::VectorXd& upper_;
    double tol_;
    int M_, K_;
    Eigen::MatrixXd H2_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd row_norm_;
    std::vector<Eigen::VectorXd> ycache_;
};

void validate_inputs(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                     const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                     const Eigen::VectorXd& upper) {
    const auto M = H.rows();
    if (M < 1 || H.cols() != M || c.size() != M) {
        throw std::invalid_argument("qp_solver: H must be MxM with M >= 1 and c length M");
    }
    if (A.cols() != M || lower.size() != A.rows() || upper.size() != A.rows()) {
        throw std::invalid_argument("qp_solver: constraint dimensions inconsistent");
    }
    if (!H.allFinite() || !c.allFinite() || !A.allFinite()) {
        throw std::invalid_argument("qp_solver: non-finite H, c or A");
    }
    const double hmax = H.cwiseAbs().maxCoeff();
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, hmax)) {
        throw std::invalid_argument("qp_solver: H is not symmetric");
    }
    for (Eigen::Index j = 0; j < lower.size(); ++j) {
        if (std::isnan(lower(j)) || std::isnan(upper(j))) {
            throw std::invalid_argument("qp_solver: NaN bound at row " + std::to_string(j));
        }
        if (lower(j) > upper(j)) {
            throw SolverError("qp_solver: infeasible, lower > upper at row " +
                              std::to_string(j));
        }
        if (lower(j) == kInf || upper(j) == -kInf) {
            throw SolverError("qp_solver: infeasible bound at row " + std::to_string(j));
        }
    }
}

/// Feasible point from singleton (box) rows alone: intersect the per-variable
/// intervals and clamp the origin into them. Covers every configuration whose
/// coupled rows are loose once the boxes hold.
Eigen::VectorXd box_projected_origin(const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, double tol) {
    const auto M = A.cols();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(M, -kInf);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(M, kInf);
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        Eigen::Index nz = -1;
        bool singleton = true;
        for (Eigen::Index i = 0; i < M; ++i) {
            if (A(j, i) != 0.0) {
                if (nz >= 0) {
                    singleton = false;
                    break;
                }
                nz = i;
            }
        }
        if (!singleton || nz < 0) continue;
        const double s = A(j, nz);
        double a = lower(j) / s, b = upper(j) / s;
        if (s < 0.0) std::swap(a, b);
        lo(nz) = std::max(lo(nz), a);
        hi(nz) = std::min(hi(nz), b);
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(M);
    for (Eigen::Index i = 0; i < M; ++i) {
        if (lo(i) > hi(i)) {
            if (lo(i) > hi(i) + tol * std::max(1.0, std::abs(hi(i)))) {
                throw SolverError("qp_solver: infeasible, empty interval for variable " +
                                  std::to_string(i));
            }
            x(i) = 0.5 * (lo(i) + hi(i));  // intervals crossed within round-off
        } else {
            x(i) = std::clamp(0.0, lo(i), hi(i));
        }
    }
    return x;
}

/// Elastic feasibility search: minimize s^2 + eps*|x|^2 over the relaxed
/// system a_j.x + s >= l_j, a_j.x - s <= u_j, s >= 0, starting from a point
/// that is feasible by construction. Shrinking eps drives s toward the least
/// achievable violation; a stagnating s signals an infeasible system.
Eigen::VectorXd elastic_feasible_point(const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper, double tol) {
    const auto M = A.cols();
    const auto K = A.rows();
    std::vector<Eigen::Index> lo_rows, up_rows;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
        if (lower(j) > -kInf) {
            lo_rows.push_back(j);
            worst = std::max(worst, lower(j));
        }
        if (upper(j) < kInf) {
            up_rows.push_back(j);
            worst = std::max(worst, -upper(j));
        }
    }
    const auto Kp = static_cast<Eigen::Index>(lo_rows.size() + up_rows.size()) + 1;
    Eigen::MatrixXd Ap = Eigen::MatrixXd::Zero(Kp, M + 1);
    Eigen::VectorXd lp = Eigen::VectorXd::Constant(Kp, -kInf);
    Eigen::VectorXd up = Eigen::VectorXd::Constant(Kp, kInf);
    Eigen::Index r = 0;
    for (Eigen::Index j : lo_rows) {
        Ap.block(r, 0, 1, M) = A.row(j);
        Ap(r, M) = 1.0;
        lp(r) = lower(j);
        ++r;
    }
    for (Eigen::Index j : up_rows) {
        Ap.block(r, 0, 1, M) = A.row(j);
        Ap(r, M) = -1.0;
        up(r) = upper(j);
        ++r;
    }
    Ap(r, M) = 1.0;
    lp(r) = 0.0;

    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(M + 1);
    z0(M) = worst + 1.0;
    const Eigen::VectorXd cp = Eigen::VectorXd::Zero(M + 1);

    double prev_s = kInf;
    for (double eps = 1e-8; eps >= 1e-27; eps *= 1e-6) {
        Eigen::MatrixXd Hp = eps * Eigen::MatrixXd::Identity(M + 1, M + 1);
        Hp(M, M) = 1.0;
        ActiveSetSolver sub(Hp, cp, Ap, lp, up, tol);
        QPSolution zsol = sub.run(z0, {});
        const Eigen::VectorXd cand = zsol.minimizer.head(M);
        const double s = zsol.minimizer(M);
        if (point_feasible(A, lower, upper, cand, tol)) return cand;
        if (s > 0.1 * prev_s) {
            throw SolverError("qp_solver: infeasible, minimal constraint violation " +
                              std::to_string(s));
        }
        prev_s = s;
        z0 = zsol.minimizer;
    }
    throw SolverError("qp_solver: feasibility search failed to converge");
}

}  // namespace

QPSolution solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                 const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                 const Eigen::VectorXd& upper, double tol, const WarmStart* warm_start) {
    validate_inputs(H, c, A, lower, upper);
    ActiveSetSolver solver(H, c, A, lower, upper, tol);

    Eigen::VectorXd x0;
    std::vector<WorkingEntry> working;
    if (warm_start && warm_start->point.size() == H.rows() &&
        warm_start->point.allFinite() && solver.feasible(warm_start->point)) {
        x0 = warm_start->point;
        // Keep only entries still tight at the start point and mutually
        // independent; anything else would poison the projected system.
        Eigen::MatrixXd rows(0, A.cols());
        for (const auto& [row, side] : warm_start->working_set) {
            if (row < 0 || row >= A.rows()) continue;
            const double bnd = (side == BoundSide::Upper) ? upper(row) : lower(row);
            if (!std::isfinite(bnd)) continue;
            if (std::abs(A.row(row).dot(x0) - bnd) > 1e-8 * bound_scale(bnd)) continue;
            bool dup = false;
            for (const auto& e : working) dup = dup || e.row == row;
            if (dup) continue;
            Eigen::MatrixXd cand(rows.rows() + 1, A.cols());
            cand << rows, A.row(row);
            if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(cand).rank() != cand.rows())
                continue;
            rows = std::move(cand);
            working.push_back({row, side});
        }
    } else {
        x0 = Eigen::VectorXd::Zero(H.rows());
        if (!solver.feasible(x0)) {
            x0 = box_projected_origin(A, lower, upper, tol);
            if (!solver.feasible(x0)) {
                x0 = elastic_feasible_point(A, lower, upper, tol);
            }
        }
    }
    return solver.run(std::move(x0), std::move(working));
}

double kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                    const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                    const Eigen::VectorXd& upper, const Eigen::VectorXd& point,
                    const Eigen::VectorXd& lambda_lower,
                    const Eigen::VectorXd& lambda_upper) {
    if (point.size() != H.rows() || lambda_lower.size() != A.rows() ||
        lambda_upper.size() != A.rows()) {
        throw std::invalid_argument("kkt_residual: dimension mismatch");
    }
    double res = 0.0;
    const Eigen::VectorXd stat =
        2.0 * H * point + c + A.transpose() * (lambda_upper - lambda_lower);
    if (stat.size() > 0) res = stat.lpNorm<Eigen::Infinity>();
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        const double v = A.row(j).dot(point);
        res = std::max(res, -lambda_lower(j));
        res = std::max(res, -lambda_upper(j));
        if (lower(j) > -kInf) {
            res = std::max(res, lower(j) - v);                          // primal
            res = std::max(res, std::abs(lambda_lower(j) * (v - lower(j))));  // complementarity
        } else {
            res = std::max(res, std::abs(lambda_lower(j)));
        }
        if (upper(j) < kInf) {
            res = std::max(res, v - upper(j));
            res = std::max(res, std::abs(lambda_upper(j) * (upper(j) - v)));
        } else {
            res = std::max(res, std::abs(lambda_upper(j)));
        }
    }
    return res;
}

}  // namespace mpcport
