#include "mpcport/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mpcport/errors.hpp"

namespace mpcport {

void BacktestConfig::validate(int num_assets) const {
    if (cost_fractions.size() != num_assets || (cost_fractions.array() < 0.0).any()) {
        throw ConfigError("backtest: cost fractions must be nonnegative, one per asset");
    }
    constraints.validate(num_assets);
    if (horizon < 1) throw ConfigError("backtest: horizon must be >= 1");
    if (!(control_cost > 0.0)) throw ConfigError("backtest: control cost must be > 0");
    if (!(rho > 0.0)) throw ConfigError("backtest: rho must be > 0");
    if (!(1.0 + mu0 > 0.0)) throw ConfigError("backtest: benchmark growth must exceed -1");
    if (!(initial_wealth > 0.0)) throw ConfigError("backtest: initial wealth must be > 0");
    if (!(lend_rate <= borrow_rate)) {
        throw ConfigError("backtest: lending rate must not exceed borrowing rate");
    }
    estimation.validate();
    if (known_model) {
        if (known_model->model.num_assets() != num_assets) {
            throw ConfigError("backtest: known model asset count does not match the data");
        }
        if (known_model->chain.num_regimes() != known_model->model.num_regimes() ||
            known_model->chain.num_regimes() < 2) {
            throw ConfigError("backtest: known model needs a matching chain with >= 2 regimes");
        }
    } else if (estimation.mle_window < 2) {
        throw ConfigError("backtest: transition estimation needs mle_window >= 2");
    }
}

Eigen::VectorXd benchmark_series(double v0_init, double mu0, int length) {
    if (!(v0_init > 0.0)) {
        throw std::invalid_argument("benchmark_series: initial value must be > 0");
    }
    if (length < 1) throw std::invalid_argument("benchmark_series: length must be >= 1");
    Eigen::VectorXd series(length);
    for (int k = 0; k < length; ++k) series(k) = v0_init * std::pow(1.0 + mu0, k);
    return series;
}

std::pair<double, double> wealth_with_costs(const MarketModel& model, double wealth,
                                            const AllocationVector& u_new,
                                            const AllocationVector& u_prev,
                                            const Eigen::VectorXd& eta,
                                            const Eigen::VectorXd& costs) {
    const int n = model.num_assets();
    if (u_new.size() != n + 1 || u_prev.size() != n + 1 || costs.size() != n) {
        throw std::invalid_argument("wealth_with_costs: dimension mismatch");
    }
    const double cost =
        (costs.array() * (u_new.head(n) - u_prev.head(n)).cwiseAbs().array()).sum();
    return {wealth_step(model, wealth, u_new, eta) - cost, cost};
}

BacktestResult run(const PriceTable& table, const BacktestConfig& cfg) {
    const int total_days = table.days();
    const int n = table.num_assets();
    cfg.validate(n);
    const EstimationConfig& est = cfg.estimation;

    const std::vector<double> index_rets = table.index_returns();
    const RegimeSequence all_regimes = classify_regimes(index_rets, est);
    auto regime_of_day = [&](int day) { return all_regimes[static_cast<std::size_t>(day - 1)]; };

    // First decision day: enough history for the return average and for the
    // transition estimate taken from the days before the tracking period.
    const int first_day = std::max(est.ma_window, est.mle_window + 1);
    if (first_day > total_days - 2) {
        throw DataError("backtest: insufficient history, need at least " +
                        std::to_string(first_day + 2) + " rows but got " +
                        std::to_string(total_days));
    }

    BacktestResult res;
    res.first_decision_day = first_day;

    int num_regimes = 2;
    TransitionMatrix chain = TransitionMatrix::identity(1);
    if (cfg.known_model) {
        chain = cfg.known_model->chain;
        num_regimes = chain.num_regimes();
    } else {
        const RegimeSequence window(
            all_regimes.begin() + (first_day - est.mle_window - 1),
            all_regimes.begin() + (first_day - 1));
        chain = estimate_transition_matrix(window, 2, &res.chain_self_loops);
    }

    const Eigen::VectorXd bench =
        benchmark_series(cfg.initial_wealth, cfg.mu0, total_days - first_day + cfg.horizon + 1);
    const int dim = n + 1;
    PredictionConfig pcfg;
    pcfg.horizon = cfg.horizon;
    pcfg.control_cost = [r = cfg.control_cost, dim](int, int) {
        return Eigen::MatrixXd(r * Eigen::MatrixXd::Identity(dim, dim));
    };
    pcfg.rho = [rho = cfg.rho](int, int) { return rho; };
    pcfg.benchmark = [&bench](int k) { return bench(k); };

    const std::vector<Eigen::MatrixXd> vols = regime_volatilities(est, n);
    double wealth = cfg.initial_wealth;
    AllocationVector u_prev = AllocationVector::Zero(dim);
    WarmStart warm;
    bool have_warm = false;

    for (int day = first_day; day <= total_days - 2; ++day) {
        const int observed = cfg.lag_regime ? day - 1 : day;
        const int state = regime_of_day(observed);
        const RegimeIndicator theta = RegimeIndicator::kronecker(state, num_regimes);

        std::optional<MarketModel> estimated;
        const MarketModel* model = nullptr;
        if (cfg.known_model) {
            model = &cfg.known_model->model;
        } else {
            // Moving average over returns up to and including the decision day.
            const Eigen::VectorXd mu_hat = expected_returns(table.closes, est.ma_window, day + 1);
            estimated.emplace(std::vector<RegimeParameters>{{mu_hat, vols[0]}, {mu_hat, vols[1]}},
                              cfg.lend_rate, cfg.borrow_rate);
            model = &*estimated;
            if (cfg.reestimate_daily) {
                const RegimeSequence window(all_regimes.begin() + (day - est.mle_window),
                                            all_regimes.begin() + day);
                chain = estimate_transition_matrix(window, 2, nullptr);
            }
        }

        QPSolution sol;
        AllocationVector u;
        try {
            u = mpc_step(chain, theta, *model, pcfg, cfg.constraints, wealth, day - first_day,
                         cfg.constraint_mode, have_warm ? &warm : nullptr, &sol);
        } catch (const SolverError& err) {
            throw SolverError(std::string(err.what()) + " (on " +
                              table.dates[static_cast<std::size_t>(day)] + ")");
        }
        warm.point = sol.minimizer;
        warm.working_set.clear();
        for (const auto& ac : sol.active_set) warm.working_set.emplace_back(ac.row, ac.side);
        have_warm = true;

        const Eigen::VectorXd eta = table.asset_returns(day + 1);
        const auto [next_wealth, cost] =
            wealth_with_costs(*model, wealth, u, u_prev, eta, cfg.cost_fractions);

        LedgerRow row;
        row.date = table.dates[static_cast<std::size_t>(day)];
        row.wealth = wealth;
        row.benchmark = bench(day - first_day);
        row.allocation = u;
        row.riskfree = riskfree_allocation(wealth, u);
        row.regime = state;
        row.turnover = (u.head(n) - u_prev.head(n)).cwiseAbs().sum();
        row.cost_paid = cost;
        res.ledger.push_back(std::move(row));

        u_prev = u;
        wealth = next_wealth;
        if (!(wealth > 0.0)) {
            res.bankrupt = true;
            res.bankrupt_date = table.dates[static_cast<std::size_t>(day + 1)];
            break;
        }
    }

    // Settlement row: the last realized wealth with the holdings carried over.
    const int final_day = res.bankrupt
                              ? res.first_decision_day + static_cast<int>(res.ledger.size())
                              : total_days - 1;
    LedgerRow final;
    final.date = table.dates[static_cast<std::size_t>(final_day)];
    final.wealth = wealth;
    final.benchmark = bench(final_day - first_day);
    final.allocation = u_prev;
    final.riskfree = riskfree_allocation(wealth, u_prev);
    final.regime = regime_of_day(final_day);
    res.ledger.push_back(std::move(final));

    res.chain = chain;
    res.metrics = compute_metrics(res.ledger, cfg.constraints);
    return res;
}

BacktestMetrics compute_metrics(const std::vector<LedgerRow>& ledger,
                                const ConstraintSpec& spec) {
    if (ledger.empty()) throw std::invalid_argument("compute_metrics: empty ledger");
    BacktestMetrics m;
    m.days = static_cast<int>(ledger.size());
    m.terminal_wealth = ledger.back().wealth;
    m.terminal_benchmark = ledger.back().benchmark;
    m.terminal_deviation = (m.terminal_wealth - m.terminal_benchmark) / m.terminal_benchmark;

    for (const auto& row : ledger) {
        const double dev = std::abs(row.wealth - row.benchmark) / row.benchmark;
        m.mean_abs_deviation += dev;
        m.max_abs_deviation = std::max(m.max_abs_deviation, dev);
        m.total_costs += row.cost_paid;
        m.total_turnover += row.turnover;
        if (row.regime > static_cast<int>(m.regime_counts.size())) {
            m.regime_counts.resize(static_cast<std::size_t>(row.regime), 0);
        }
        if (row.regime >= 1) ++m.regime_counts[static_cast<std::size_t>(row.regime - 1)];
    }
    m.mean_abs_deviation /= static_cast<double>(m.days);

    const int n = static_cast<int>(spec.beta.size());
    for (std::size_t i = 0; i + 1 < ledger.size(); ++i) {
        const auto& row = ledger[i];
        const double V = row.wealth;
        if (row.allocation.size() != n + 1) {
            throw std::invalid_argument("compute_metrics: allocation size does not match spec");
        }
        double viol = 0.0;
        for (int a = 0; a < n; ++a) {
            viol = std::max(viol, spec.beta(a) * V - row.allocation(a));
            viol = std::max(viol, row.allocation(a) - spec.gamma(a) * V);
        }
        viol = std::max(viol, -row.riskfree);
        viol = std::max(viol, row.riskfree - spec.gamma(n) * V);
        viol = std::max(viol, -row.allocation(n));
        viol = std::max(viol, row.allocation(n) - spec.gamma(n + 1) * V);
        m.max_constraint_violation = std::max(m.max_constraint_violation, viol / V);
    }
    return m;
}

void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& ledger) {
    if (ledger.empty()) throw std::invalid_argument("write_ledger_csv: empty ledger");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write ledger file: " + path);
    const int dim = static_cast<int>(ledger.front().allocation.size());
    out << "date,V,V0";
    for (int i = 1; i <= dim; ++i) out << ",u_" << i;
    out << ",u_0,regime,turnover,cost_paid\n";
    for (const auto& row : ledger) {
        out << row.date << ',' << format_number(row.wealth) << ','
            << format_number(row.benchmark);
        for (int i = 0; i < dim; ++i) out << ',' << format_number(row.allocation(i));
        out << ',' << format_number(row.riskfree) << ',' << row.regime << ','
            << format_number(row.turnover) << ',' << format_number(row.cost_paid) << '\n';
    }
}

void write_metrics_report(const std::string& path, const BacktestMetrics& m) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metrics file: " + path);
    out << "days = " << m.days << '\n';
    out << "terminal_wealth = " << format_number(m.terminal_wealth) << '\n';
    out << "terminal_benchmark = " << format_number(m.terminal_benchmark) << '\n';
    out << "terminal_deviation = " << format_number(m.terminal_deviation) << '\n';
    out << "mean_abs_deviation = " << format_number(m.mean_abs_deviation) << '\n';
    out << "max_abs_deviation = " << format_number(m.max_abs_deviation) << '\n';
    out << "total_costs = " << format_number(m.total_costs) << '\n';
    out << "total_turnover = " << format_number(m.total_turnover) << '\n';
    out << "max_constraint_violation = " << format_number(m.max_constraint_violation) << '\n';
    for (std::size_t q = 0; q < m.regime_counts.size(); ++q) {
        out << "regime_" << (q + 1) << "_days = " << m.regime_counts[q] << '\n';
    }
}

}  // namespace mpcport
