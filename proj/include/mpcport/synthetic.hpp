#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "mpcport/market_model.hpp"
#include "mpcport/markov_chain.hpp"
#include "mpcport/price_data.hpp"

namespace mpcport {

struct SyntheticMarket {
    PriceTable table;
    RegimeSequence regimes;  // regime per day, day 0 onward
};

/// Samples the next state (1-based) from the chain column of `state`.
int sample_transition(const TransitionMatrix& chain, int state, std::mt19937_64& rng);

/// Generates a regime-switching market: a regime path from the chain, asset
/// prices compounding the regime-modulated returns, and an index whose daily
/// return magnitude encodes the regime (low magnitude in state 1, high in
/// state 2) so threshold classification recovers the path exactly.
/// Deterministic under the seed.
SyntheticMarket generate_market(const MarketModel& model, const TransitionMatrix& chain,
                                int days, int initial_state, double initial_price,
                                double index_low_return, double index_high_return,
                                std::uint64_t seed,
                                const std::string& index_name = "INDEX");

}  // namespace mpcport
