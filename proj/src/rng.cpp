#include "hedgekit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hedgekit {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return radius * std::cos(theta);
}

std::size_t Rng::categorical(std::span<const double> cumulative) {
    const double total = cumulative.back();
    const double u = uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> cumulative_sum(std::span<const double> weights) {
    std::vector<double> out(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        out[i] = acc;
    }
    return out;
}

}  // namespace hedgekit
