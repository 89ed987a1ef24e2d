#include "mpcport/markov_chain.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpcport {

namespace {
constexpr double kSimplexTol = 1e-12;
}

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
        throw std::invalid_argument("TransitionMatrix: square matrix of order >= 1 required");
    }
    for (int j = 0; j < entries_.cols(); ++j) {
        double col_sum = 0.0;
        for (int i = 0; i < entries_.rows(); ++i) {
            const double p = entries_(i, j);
            if (!(p >= 0.0 && p <= 1.0)) {
                throw std::invalid_argument("TransitionMatrix: entry (" + std::to_string(i) +
                                            "," + std::to_string(j) + ") outside [0,1]");
            }
            col_sum += p;
        }
        if (std::abs(col_sum - 1.0) > kSimplexTol) {
            throw std::invalid_argument("TransitionMatrix: column " + std::to_string(j) +
                                        " sums to " + std::to_string(col_sum) + ", expected 1");
        }
    }
}

TransitionMatrix TransitionMatrix::identity(int num_regimes) {
    return TransitionMatrix(Eigen::MatrixXd::Identity(num_regimes, num_regimes));
}

RegimeIndicator::RegimeIndicator(Eigen::VectorXd theta) : theta_(std::move(theta)) {
    if (theta_.size() < 1) {
        throw std::invalid_argument("RegimeIndicator: empty vector");
    }
    if ((theta_.array() < 0.0).any()) {
        throw std::invalid_argument("RegimeIndicator: negative entry");
    }
    if (std::abs(theta_.sum() - 1.0) > kSimplexTol) {
        throw std::invalid_argument("RegimeIndicator: entries must sum to 1");
    }
}

RegimeIndicator RegimeIndicator::kronecker(int state, int num_regimes) {
    if (state < 1 || state > num_regimes) {
        throw std::invalid_argument("RegimeIndicator: state " + std::to_string(state) +
                                    " outside {1..." + std::to_string(num_regimes) + "}");
    }
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(num_regimes);
    theta(state - 1) = 1.0;
    return RegimeIndicator(std::move(theta));
}

int RegimeIndicator::observed_state() const {
    for (int i = 0; i < theta_.size(); ++i) {
        if (theta_(i) == 1.0) return i + 1;
    }
    return 0;
}

namespace {

void check_dims(const TransitionMatrix& chain, const RegimeIndicator& theta) {
    if (chain.num_regimes() != theta.size()) {
        throw std::invalid_argument("markov_chain: chain has " +
                                    std::to_string(chain.num_regimes()) + " regimes, indicator has " +
                                    std::to_string(theta.size()));
    }
}

}  // namespace

Eigen::VectorXd propagate(const TransitionMatrix& chain, const RegimeIndicator& theta,
                          long steps) {
    check_dims(chain, theta);
    if (steps < 0) {
        throw std::invalid_argument("propagate: negative step count");
    }
    Eigen::VectorXd dist = theta.theta();
    for (long s = 0; s < steps; ++s) {
        dist = chain.entries() * dist;
    }
    return dist;
}

Eigen::MatrixXd martingale_covariance(const TransitionMatrix& chain,
                                      const RegimeIndicator& theta) {
    check_dims(chain, theta);
    const Eigen::MatrixXd& P = chain.entries();
    const Eigen::VectorXd next = P * theta.theta();
    return Eigen::MatrixXd(next.asDiagonal()) -
           P * theta.theta().asDiagonal() * P.transpose();
}

Eigen::MatrixXd joint_occupancy(const TransitionMatrix& chain, const RegimeIndicator& theta,
                                long t, long f) {
    check_dims(chain, theta);
    if (t < 0 || t > f) {
        throw std::invalid_argument("joint_occupancy: need 0 <= t <= f");
    }
    const Eigen::VectorXd at_t = propagate(chain, theta, t);
    Eigen::MatrixXd lag = Eigen::MatrixXd::Identity(chain.num_regimes(), chain.num_regimes());
    for (long s = 0; s < f - t; ++s) {
        lag = chain.entries() * lag;
    }
    return at_t.asDiagonal() * lag.transpose();
}

TransitionMatrix estimate_transition_matrix(const RegimeSequence& seq, int num_regimes,
                                            std::vector<int>* self_loop_sources) {
    if (num_regimes < 1) {
        throw std::invalid_argument("estimate_transition_matrix: num_regimes < 1");
    }
    if (seq.size() < 2) {
        throw std::invalid_argument("estimate_transition_matrix: need at least 2 observations");
    }
    for (int s : seq) {
        if (s < 1 || s > num_regimes) {
            throw std::invalid_argument("estimate_transition_matrix: state " + std::to_string(s) +
                                        " outside {1..." + std::to_string(num_regimes) + "}");
        }
    }
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_regimes, num_regimes);
    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
        counts(seq[k + 1] - 1, seq[k] - 1) += 1.0;
    }
    Eigen::MatrixXd P(num_regimes, num_regimes);
    for (int j = 0; j < num_regimes; ++j) {
        const double total = counts.col(j).sum();
        if (total > 0.0) {
            P.col(j) = counts.col(j) / total;
        } else {
            P.col(j).setZero();
            P(j, j) = 1.0;  // never left state j: keep it absorbing
            if (self_loop_sources) self_loop_sources->push_back(j + 1);
        }
    }
    return TransitionMatrix(std::move(P));
}

}  // namespace mpcport
