#include "mpcport/synthetic.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

#include "mpcport/errors.hpp"

namespace mpcport {

int sample_transition(const TransitionMatrix& chain, int state, std::mt19937_64& rng) {
    if (state < 1 || state > chain.num_regimes()) {
        throw std::invalid_argument("sample_transition: state out of range");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cum = 0.0;
    for (int i = 0; i < chain.num_regimes(); ++i) {
        cum += chain.entries()(i, state - 1);
        if (u < cum) return i + 1;
    }
    return chain.num_regimes();
}

namespace {

std::string iso_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace

SyntheticMarket generate_market(const MarketModel& model, const TransitionMatrix& chain,
                                int days, int initial_state, double initial_price,
                                double index_low_return, double index_high_return,
                                std::uint64_t seed, const std::string& index_name) {
    if (days < 2) throw ConfigError("generate_market: need at least 2 days");
    if (chain.num_regimes() != model.num_regimes()) {
        throw ConfigError("generate_market: chain and model regime counts differ");
    }
    if (initial_state < 1 || initial_state > chain.num_regimes()) {
        throw ConfigError("generate_market: initial state out of range");
    }
    if (!(initial_price > 0.0)) throw ConfigError("generate_market: initial price must be > 0");
    if (!(index_low_return > 0.0 && index_high_return > 0.0)) {
        throw ConfigError("generate_market: index return magnitudes must be > 0");
    }

    const int n = model.num_assets();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticMarket market;
    market.regimes.resize(static_cast<std::size_t>(days));
    market.regimes[0] = initial_state;

    auto& table = market.table;
    table.index_name = index_name;
    table.asset_names.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) table.asset_names.push_back("A" + std::to_string(a + 1));
    table.closes.resize(days, n);
    table.index_closes.resize(days);
    table.closes.row(0).setConstant(initial_price);
    table.index_closes(0) = initial_price;

    const std::chrono::sys_days start =
        std::chrono::year{2000} / std::chrono::January / std::chrono::day{3};
    table.dates.reserve(static_cast<std::size_t>(days));
    for (int d = 0; d < days; ++d) {
        table.dates.push_back(iso_date(start + std::chrono::days{d}));
    }

    for (int d = 1; d < days; ++d) {
        const int state = sample_transition(chain, market.regimes[static_cast<std::size_t>(d - 1)], rng);
        market.regimes[static_cast<std::size_t>(d)] = state;
        const auto& reg = model.regime(state);

        Eigen::VectorXd w(n);
        for (int j = 0; j < n; ++j) w(j) = gauss(rng);
        const Eigen::VectorXd eta = reg.mu + reg.sigma * w;
        for (int a = 0; a < n; ++a) {
            const double next = table.closes(d - 1, a) * (1.0 + eta(a));
            if (!(next > 0.0)) {
                throw ConfigError("generate_market: non-positive price generated; "
                                  "model parameters too extreme");
            }
            table.closes(d, a) = next;
        }
        const double magnitude = (state == 1) ? index_low_return : index_high_return;
        const double sign = (unit(rng) < 0.5) ? -1.0 : 1.0;
        table.index_closes(d) = table.index_closes(d - 1) * (1.0 + sign * magnitude);
    }
    return market;
}

}  // namespace mpcport
