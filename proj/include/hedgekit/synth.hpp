#pragma once

#include <cstdint>
#include <string>

#include "hedgekit/eval.hpp"
#include "hedgekit/marketdata.hpp"

namespace hedgekit {

/// Offline stand-in for a desk price history: ten instruments driven by three
/// common factors plus idiosyncratic noise, one near-duplicate pair (H04/H05),
/// and a target that is a noisy linear combination of the instruments.
struct SynthConfig {
    std::size_t days = 2201;             ///< price rows
    std::uint64_t seed = 20140327;
    double duplicate_correlation = 0.995;  ///< return correlation of H04 and H05
    double target_r_squared = 0.96;       ///< population R^2 of the target on the instruments
    std::string target_name = "TARGET";
    std::string start_date = "2014-03-27";
};

PricePanel synth_prices(const SynthConfig& config = {});

/// Unit costs per instrument built from funding rates and spreads.
CostTable synth_costs(const SynthConfig& config = {});

/// Hedge weights the synthetic target is built from, in instrument order.
VectorXd synth_true_betas();

void write_price_csv(std::ostream& out, const PricePanel& panel);
void write_cost_csv(std::ostream& out, const CostTable& costs);

}  // namespace hedgekit
