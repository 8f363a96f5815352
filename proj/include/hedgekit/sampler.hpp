#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hedgekit/marketdata.hpp"

namespace hedgekit {

/// Exponential decay model used for historical resampling.
///
/// alpha_decay is the explained-variance weighted average of the per
/// principal-component alphas; each per-component alpha is the grid value
/// whose rolling probability-integral-transform series is closest to uniform
/// in Kolmogorov-Smirnov distance.
struct DecayModel {
    double alpha_decay = 1.0;
    int window = 0;
    std::vector<double> component_alphas;
    std::vector<double> component_weights;
    double pit_stat = 0.0;
    double pit_pvalue = 1.0;

    /// No decay: every historical row equally likely.
    static DecayModel unit() { return {}; }
};

struct SamplePlan {
    std::size_t n_samples = 1000;
    std::uint64_t seed = 0;
    DecayModel decay = DecayModel::unit();
};

struct KsResult {
    double statistic = 0.0;
    double pvalue = 1.0;
};

enum class Execution { Serial, Parallel };

/// Probability vector of length t with weight[i] proportional to
/// alpha^(t-1-i); the last (most recent) entry is the largest.
std::vector<double> decay_weights(std::size_t t, double alpha);

/// Rolling decay-weighted PIT values of series[window..] (midpoint ties).
std::vector<double> pit_values(std::span<const double> series, double alpha, int window,
                               Execution exec = Execution::Parallel);

/// One-sample KS test against U(0,1). p-value from the asymptotic Kolmogorov
/// distribution with Stephens' small-sample correction.
KsResult ks_uniform(std::span<const double> values);

/// 61 points from 0.97 to 1.0 inclusive.
std::vector<double> default_decay_grid();

DecayModel calibrate_decay(const ReturnPanel& panel, int window, std::span<const double> grid,
                           Execution exec = Execution::Parallel);

/// Resamples whole rows i.i.d. with replacement from decay_weights(rows, alpha).
ReturnPanel draw_sample(const ReturnPanel& panel, const SamplePlan& plan);

}  // namespace hedgekit
