// Command-line front end: backtest, simulate and estimate subcommands driven
// by a JSON manifest with flag overrides (flags > file > defaults).
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mpcport/backtest.hpp"
#include "mpcport/errors.hpp"
#include "mpcport/estimation.hpp"
#include "mpcport/synthetic.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;
constexpr int kExitBankrupt = 5;

struct CliOverrides {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> horizon;
    std::optional<bool> lenient;
    std::optional<std::string> constraint_mode;
};

json load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw mpcport::ConfigError("cannot open config file: " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw mpcport::ConfigError("config file " + path + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw mpcport::ConfigError("config key '" + key + "' has the wrong type");
    }
}

/// Scalar-or-array manifest entries broadcast to an n-vector.
Eigen::VectorXd broadcast(const json& j, const std::string& key, double fallback, int n) {
    if (!j.contains(key)) return Eigen::VectorXd::Constant(n, fallback);
    const auto& v = j.at(key);
    if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
    if (v.is_array()) {
        if (static_cast<int>(v.size()) != n) {
            throw mpcport::ConfigError("config key '" + key + "' needs " + std::to_string(n) +
                                       " entries");
        }
        Eigen::VectorXd out(n);
        for (int i = 0; i < n; ++i) out(i) = v.at(static_cast<std::size_t>(i)).get<double>();
        return out;
    }
    throw mpcport::ConfigError("config key '" + key + "' must be a number or array");
}

mpcport::CsvSchema schema_from(const json& manifest, const CliOverrides& cli) {
    mpcport::CsvSchema schema;
    schema.date_column = get_or<std::string>(manifest, "date_column", "date");
    schema.index_column = get_or<std::string>(manifest, "index_column", "INDEX");
    if (manifest.contains("asset_columns")) {
        schema.asset_columns = manifest.at("asset_columns").get<std::vector<std::string>>();
    }
    schema.lenient = cli.lenient.value_or(get_or<bool>(manifest, "lenient_data", false));
    return schema;
}

mpcport::EstimationConfig estimation_from(const json& m) {
    mpcport::EstimationConfig est;
    est.vol_threshold = get_or<double>(m, "vol_threshold", 0.015);
    est.sigma_low = get_or<double>(m, "sigma_low", 0.01);
    est.sigma_high = get_or<double>(m, "sigma_high", 0.02);
    est.ma_window = get_or<int>(m, "ma_window", 13);
    est.mle_window = get_or<int>(m, "mle_window", 200);
    est.vol_window = get_or<int>(m, "vol_window", 10);
    const std::string measure = get_or<std::string>(m, "vol_measure", "abs_return");
    if (measure == "abs_return") {
        est.vol_measure = mpcport::VolatilityMeasure::AbsReturn;
    } else if (measure == "rolling_std") {
        est.vol_measure = mpcport::VolatilityMeasure::RollingStd;
    } else {
        throw mpcport::ConfigError("vol_measure must be 'abs_return' or 'rolling_std'");
    }
    return est;
}

mpcport::ConstraintMode mode_from(const json& manifest, const CliOverrides& cli) {
    const std::string mode =
        cli.constraint_mode.value_or(get_or<std::string>(manifest, "constraint_mode",
                                                         "first-block"));
    if (mode == "first-block") return mpcport::ConstraintMode::FirstBlock;
    if (mode == "full-horizon") return mpcport::ConstraintMode::FullHorizon;
    throw mpcport::ConfigError("constraint_mode must be 'first-block' or 'full-horizon'");
}

/// Parameter checks that need no data: plain scalar contradictions fail here,
/// before any file is touched.
void precheck_manifest(const json& m) {
    if (m.contains("beta") && m.at("beta").is_number() && m.contains("gamma") &&
        m.at("gamma").is_number() &&
        m.at("beta").get<double>() > m.at("gamma").get<double>()) {
        throw mpcport::ConfigError("beta exceeds gamma");
    }
    if (m.contains("horizon") && m.at("horizon").get<int>() < 1) {
        throw mpcport::ConfigError("horizon must be >= 1");
    }
    if (m.contains("initial_wealth") && !(m.at("initial_wealth").get<double>() > 0.0)) {
        throw mpcport::ConfigError("initial_wealth must be > 0");
    }
}

mpcport::BacktestConfig backtest_config(const json& m, const CliOverrides& cli, int n) {
    mpcport::BacktestConfig cfg;
    cfg.cost_fractions = broadcast(m, "cost_fraction", 0.0006, n);
    cfg.constraints.beta = broadcast(m, "beta", -0.6, n);
    Eigen::VectorXd gamma_assets = broadcast(m, "gamma", 3.0, n);
    cfg.constraints.gamma.resize(n + 2);
    cfg.constraints.gamma.head(n) = gamma_assets;
    cfg.constraints.gamma(n) = get_or<double>(m, "gamma_riskfree", 3.0);
    double borrow_default = 3.0;  // uniform gamma also caps borrowing unless overridden
    if (m.contains("gamma") && m.at("gamma").is_number()) {
        borrow_default = m.at("gamma").get<double>();
    }
    cfg.constraints.gamma(n + 1) = get_or<double>(m, "gamma_borrow", borrow_default);
    cfg.horizon = cli.horizon.value_or(get_or<int>(m, "horizon", 10));
    cfg.control_cost = get_or<double>(m, "control_cost", 1e-4);
    cfg.rho = get_or<double>(m, "rho", 0.1);
    cfg.mu0 = get_or<double>(m, "mu0", 0.0015);
    cfg.estimation = estimation_from(m);
    cfg.initial_wealth = get_or<double>(m, "initial_wealth", 1.0);
    cfg.lend_rate = get_or<double>(m, "lend_rate", 0.0);
    cfg.borrow_rate = get_or<double>(m, "borrow_rate", 0.0);
    cfg.constraint_mode = mode_from(m, cli);
    cfg.reestimate_daily = get_or<bool>(m, "reestimate_daily", false);
    cfg.lag_regime = get_or<bool>(m, "lag_regime", false);
    return cfg;
}

std::filesystem::path ensure_out_dir(const json& manifest, const CliOverrides& cli) {
    const std::string dir =
        cli.out_dir.value_or(get_or<std::string>(manifest, "output_dir", "."));
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw mpcport::DataError("cannot create output directory: " + dir);
    return p;
}

std::string prices_path(const json& manifest) {
    const std::string path = get_or<std::string>(manifest, "prices", "");
    if (path.empty()) throw mpcport::ConfigError("config key 'prices' is required");
    return path;
}

int cmd_backtest(const json& manifest, const CliOverrides& cli) {
    precheck_manifest(manifest);
    const auto table = mpcport::load_prices(prices_path(manifest), schema_from(manifest, cli));
    const auto cfg = backtest_config(manifest, cli, table.num_assets());
    const auto out_dir = ensure_out_dir(manifest, cli);

    mpcport::BacktestResult result = mpcport::run(table, cfg);
    mpcport::write_ledger_csv((out_dir / "ledger.csv").string(), result.ledger);
    mpcport::write_metrics_report((out_dir / "metrics.txt").string(), result.metrics);

    for (int state : result.chain_self_loops) {
        std::cerr << "warning: state " << state
                  << " never observed as a transition source; using a self-loop column\n";
    }
    for (const auto& fill : table.fills) {
        std::cerr << "warning: forward-filled " << fill.column << " at line " << fill.line
                  << "\n";
    }
    const auto& m = result.metrics;
    std::cout << "days " << m.days << "  terminal wealth " << mpcport::format_number(m.terminal_wealth)
              << "  benchmark " << mpcport::format_number(m.terminal_benchmark)
              << "  deviation " << mpcport::format_number(m.terminal_deviation) << "\n"
              << "ledger: " << (out_dir / "ledger.csv").string() << "\n"
              << "metrics: " << (out_dir / "metrics.txt").string() << "\n";
    if (result.bankrupt) {
        std::cerr << "bankruptcy on " << result.bankrupt_date << "\n";
        return kExitBankrupt;
    }
    return kExitOk;
}

int cmd_simulate(const json& manifest, const CliOverrides& cli) {
    precheck_manifest(manifest);
    if (!manifest.contains("simulate")) {
        throw mpcport::ConfigError("config section 'simulate' is required");
    }
    const json& sim = manifest.at("simulate");
    const std::uint64_t seed = cli.seed.value_or(get_or<std::uint64_t>(manifest, "seed", 1));
    const int days = get_or<int>(sim, "days", 900);
    const int n = get_or<int>(sim, "assets", 5);
    const double initial_price = get_or<double>(sim, "initial_price", 100.0);
    const int initial_state = get_or<int>(sim, "initial_state", 1);

    if (!sim.contains("regimes") || !sim.at("regimes").is_array() || sim.at("regimes").empty()) {
        throw mpcport::ConfigError("simulate.regimes must be a nonempty array");
    }
    std::vector<mpcport::RegimeParameters> regimes;
    for (const auto& r : sim.at("regimes")) {
        mpcport::RegimeParameters reg;
        reg.mu = broadcast(r, "mu", 0.0, n);
        reg.sigma = get_or<double>(r, "sigma", 0.01) * Eigen::MatrixXd::Identity(n, n);
        regimes.push_back(std::move(reg));
    }
    const int v = static_cast<int>(regimes.size());
    Eigen::MatrixXd P(v, v);
    if (sim.contains("transition")) {
        const auto& tj = sim.at("transition");
        if (static_cast<int>(tj.size()) != v) {
            throw mpcport::ConfigError("simulate.transition must be v x v");
        }
        for (int i = 0; i < v; ++i) {
            for (int j = 0; j < v; ++j) P(i, j) = tj.at(i).at(j).get<double>();
        }
    } else {
        P.setIdentity();
    }

    const double threshold = get_or<double>(manifest, "vol_threshold", 0.015);
    const double low_mag = get_or<double>(sim, "index_low_return", 0.5 * threshold);
    const double high_mag = get_or<double>(sim, "index_high_return", 2.0 * threshold);
    const std::string index_name = get_or<std::string>(manifest, "index_column", "INDEX");

    mpcport::MarketModel model(std::move(regimes), get_or<double>(manifest, "lend_rate", 0.0),
                               get_or<double>(manifest, "borrow_rate", 0.0));
    mpcport::TransitionMatrix chain{P};
    const auto market = mpcport::generate_market(model, chain, days, initial_state,
                                                 initial_price, low_mag, high_mag, seed,
                                                 index_name);

    const auto out_dir = ensure_out_dir(manifest, cli);
    const auto path = out_dir / "prices.csv";
    mpcport::write_prices_csv(path.string(), market.table);

    std::vector<long> counts(static_cast<std::size_t>(v), 0);
    for (int s : market.regimes) ++counts[static_cast<std::size_t>(s - 1)];
    std::cout << "wrote " << path.string() << " (" << days << " days, " << n << " assets)\n";
    for (int q = 0; q < v; ++q) {
        std::cout << "regime " << (q + 1) << ": " << counts[static_cast<std::size_t>(q)]
                  << " days\n";
    }
    return kExitOk;
}

int cmd_estimate(const json& manifest, const CliOverrides& cli) {
    precheck_manifest(manifest);
    const auto table = mpcport::load_prices(prices_path(manifest), schema_from(manifest, cli));
    const auto est = estimation_from(manifest);
    est.validate();

    const auto returns = table.index_returns();
    if (returns.empty()) {
        throw mpcport::DataError("estimate: need at least two price rows");
    }
    const auto regimes = mpcport::classify_regimes(returns, est);
    long low = 0, high = 0;
    for (int s : regimes) (s == 1 ? low : high)++;

    std::vector<int> self_loops;
    const auto chain = mpcport::estimate_transition_matrix(regimes, 2, &self_loops);
    for (int state : self_loops) {
        std::cerr << "warning: state " << state
                  << " never observed as a transition source; using a self-loop column\n";
    }

    std::cout << "days " << table.days() << "\n";
    std::cout << "regime 1 (low volatility): " << low << " days\n";
    std::cout << "regime 2 (high volatility): " << high << " days\n";
    std::cout << "transition matrix (column-stochastic):\n";
    for (int i = 0; i < 2; ++i) {
        std::cout << "  " << mpcport::format_number(chain.entries()(i, 0)) << "  "
                  << mpcport::format_number(chain.entries()(i, 1)) << "\n";
    }
    if (table.days() >= est.ma_window + 2) {
        const Eigen::VectorXd mu =
            mpcport::expected_returns(table.closes, est.ma_window, table.days());
        std::cout << "expected returns (" << est.ma_window << "-day average):\n";
        for (int a = 0; a < table.num_assets(); ++a) {
            std::cout << "  " << table.asset_names[static_cast<std::size_t>(a)] << " "
                      << mpcport::format_number(mu(a)) << "\n";
        }
    } else {
        throw mpcport::DataError("estimate: not enough rows for the return average");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regime-switching MPC benchmark-tracking portfolio engine.\n"
                 "Configuration precedence: flags > manifest file > built-in defaults."};
    app.require_subcommand(1);

    CliOverrides cli;
    std::string mode_flag;
    bool strict_flag = false, lenient_flag = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "JSON manifest path")->required();
        sub->add_option_function<std::string>(
            "--out", [&](const std::string& v) { cli.out_dir = v; }, "Output directory");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { cli.seed = v; }, "Random seed override");
        sub->add_option_function<int>(
            "--horizon", [&](int v) { cli.horizon = v; }, "Prediction horizon override");
        sub->add_flag("--strict-data", strict_flag, "Reject rows with missing prices");
        sub->add_flag("--lenient-data", lenient_flag, "Forward-fill missing prices");
        sub->add_option("--constraint-mode", mode_flag,
                        "first-block (default) or full-horizon")
            ->check(CLI::IsMember({"first-block", "full-horizon"}));
    };

    auto* bt = app.add_subcommand("backtest", "Run the tracking backtest on a price CSV");
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic price CSV");
    auto* est = app.add_subcommand("estimate", "Report regimes and parameter estimates");
    add_common(bt);
    add_common(sim);
    add_common(est);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (strict_flag) cli.lenient = false;
    if (lenient_flag) cli.lenient = true;
    if (!mode_flag.empty()) cli.constraint_mode = mode_flag;

    try {
        const json manifest = load_manifest(cli.config_path);
        if (bt->parsed()) return cmd_backtest(manifest, cli);
        if (sim->parsed()) return cmd_simulate(manifest, cli);
        return cmd_estimate(manifest, cli);
    } catch (const mpcport::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mpcport::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const mpcport::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
