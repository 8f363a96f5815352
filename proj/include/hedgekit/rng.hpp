#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hedgekit {

/// Seedable random source with a fixed, documented algorithm so draws are
/// reproducible across standard libraries:
///   * engine: std::mt19937_64 (output sequence fixed by the C++ standard),
///   * uniform: top 53 bits of one engine output scaled by 2^-53, in [0, 1),
///   * normal: Box-Muller on two uniforms, caching the second variate,
///   * categorical: inverse CDF by binary search on the running sum.
/// std::*_distribution is deliberately not used because its algorithm is
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal();

    /// Index i with probability weights[i]; weights need not be normalized.
    std::size_t categorical(std::span<const double> cumulative);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Running sum of `weights`, for use with Rng::categorical.
std::vector<double> cumulative_sum(std::span<const double> weights);

}  // namespace hedgekit
