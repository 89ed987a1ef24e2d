#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mpcport {

/// Observed regime indices, one per trading day. Indices are 1-based:
/// state 1 is the first regime.
using RegimeSequence = std::vector<int>;

/// Column-stochastic transition matrix of a finite-state Markov chain.
///
/// Entry (i, j) is the probability of moving to state i given the chain is
/// in state j, so each column sums to one and state distributions evolve as
/// theta(k+1) = P * theta(k).
class TransitionMatrix {
public:
    /// Validates shape, entry range and column sums (1e-12 tolerance).
    explicit TransitionMatrix(Eigen::MatrixXd entries);

    static TransitionMatrix identity(int num_regimes);

    const Eigen::MatrixXd& entries() const { return entries_; }
    int num_regimes() const { return static_cast<int>(entries_.rows()); }

private:
    Eigen::MatrixXd entries_;
};

/// Distribution over regimes. An observed state is the Kronecker one-hot
/// vector; propagation produces general points on the probability simplex.
class RegimeIndicator {
public:
    /// Validates nonnegativity and unit sum (1e-12 tolerance).
    explicit RegimeIndicator(Eigen::VectorXd theta);

    /// One-hot indicator of an observed state (1-based).
    static RegimeIndicator kronecker(int state, int num_regimes);

    const Eigen::VectorXd& theta() const { return theta_; }
    int size() const { return static_cast<int>(theta_.size()); }

    /// Index (1-based) of the single unit entry, or 0 if not one-hot.
    int observed_state() const;

private:
    Eigen::VectorXd theta_;
};

/// t-step distribution P^t * theta. Result stays on the simplex.
Eigen::VectorXd propagate(const TransitionMatrix& chain, const RegimeIndicator& theta,
                          long steps);

/// Conditional covariance of the indicator innovation nu(k+1):
/// diag{P theta} - P diag{theta} P^T. Symmetric, PSD, rows/columns sum to 0.
Eigen::MatrixXd martingale_covariance(const TransitionMatrix& chain,
                                      const RegimeIndicator& theta);

/// Joint occupancy matrix E{theta(k+t) theta^T(k+f) | theta(k)} for t <= f,
/// computed as diag{P^t theta} * (P^(f-t))^T. Entry (q, r) is the probability
/// of being in state q at step t and state r at step f.
Eigen::MatrixXd joint_occupancy(const TransitionMatrix& chain, const RegimeIndicator& theta,
                                long t, long f);

/// Maximum-likelihood transition matrix from an observed regime path: column j
/// holds the empirical frequencies of transitions leaving state j. States never
/// seen as a transition source get a self-loop column; their indices are
/// appended to `self_loop_sources` when provided, so callers can warn.
TransitionMatrix estimate_transition_matrix(const RegimeSequence& seq, int num_regimes,
                                            std::vector<int>* self_loop_sources = nullptr);

}  // namespace mpcport
