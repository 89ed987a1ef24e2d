#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpcport/estimation.hpp"
#include "mpcport/market_model.hpp"
#include "mpcport/mpc_controller.hpp"
#include "mpcport/price_data.hpp"

namespace mpcport {

/// True market parameters handed to the controller directly, bypassing the
/// estimation pipeline (synthetic experiments).
struct KnownModel {
    MarketModel model;
    TransitionMatrix chain;
};

struct BacktestConfig {
    Eigen::VectorXd cost_fractions;  // per-asset transacted-amount fractions
    ConstraintSpec constraints;
    int horizon = 10;
    double control_cost = 1e-4;  // R = control_cost * I
    double rho = 0.1;
    double mu0 = 0.0015;  // benchmark daily growth
    EstimationConfig estimation;
    double initial_wealth = 1.0;
    double lend_rate = 0.0;
    double borrow_rate = 0.0;
    ConstraintMode constraint_mode = ConstraintMode::FirstBlock;
    bool reestimate_daily = false;
    bool lag_regime = false;  // classify day k from day k-1's return
    std::optional<KnownModel> known_model;

    void validate(int num_assets) const;
};

/// One tracking day. Decision rows carry the allocation chosen that day; the
/// final row settles the last realized wealth with the holdings carried over.
struct LedgerRow {
    std::string date;
    double wealth = 0.0;     // V(k), transaction costs included
    double benchmark = 0.0;  // V0 at the same tracking step
    AllocationVector allocation;  // u(k), length n+1
    double riskfree = 0.0;   // u_0(k)
    int regime = 0;
    double turnover = 0.0;   // sum_i |u_i(k) - u_i(k-1)| over risky assets
    double cost_paid = 0.0;  // cost charged for this rebalancing
};

struct BacktestMetrics {
    double terminal_wealth = 0.0;
    double terminal_benchmark = 0.0;
    double terminal_deviation = 0.0;  // (V - V0)/V0 on the final row
    double mean_abs_deviation = 0.0;
    double max_abs_deviation = 0.0;
    double total_costs = 0.0;
    double total_turnover = 0.0;
    double max_constraint_violation = 0.0;  // relative to wealth, decision rows
    std::vector<long> regime_counts;
    int days = 0;
};

struct BacktestResult {
    std::vector<LedgerRow> ledger;
    BacktestMetrics metrics;
    bool bankrupt = false;
    std::string bankrupt_date;
    TransitionMatrix chain = TransitionMatrix::identity(1);  // chain the controller used
    std::vector<int> chain_self_loops;  // states the MLE never saw as a source
    int first_decision_day = 0;         // row index of the first tracking day
};

/// Deterministic benchmark path V0(k) = v0_init * (1 + mu0)^k, k = 0..length-1.
Eigen::VectorXd benchmark_series(double v0_init, double mu0, int length);

/// Wealth update with proportional transaction costs on the rebalanced
/// amounts. Returns the next wealth and the cost charged. Equals wealth_step
/// exactly when all cost fractions are zero.
std::pair<double, double> wealth_with_costs(const MarketModel& model, double wealth,
                                            const AllocationVector& u_new,
                                            const AllocationVector& u_prev,
                                            const Eigen::VectorXd& eta,
                                            const Eigen::VectorXd& costs);

/// Day-by-day feedback loop: classify the regime, refresh estimates, solve
/// the receding-horizon program at the realized wealth, earn the next day's
/// returns, charge costs. Halts early on bankruptcy (wealth <= 0). Fully
/// deterministic.
BacktestResult run(const PriceTable& table, const BacktestConfig& cfg);

/// Summary statistics over a ledger. The final row is a settlement row: it is
/// included in tracking statistics but not in the constraint check.
BacktestMetrics compute_metrics(const std::vector<LedgerRow>& ledger,
                                const ConstraintSpec& spec);

void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& ledger);
void write_metrics_report(const std::string& path, const BacktestMetrics& metrics);

}  // namespace mpcport
