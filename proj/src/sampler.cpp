#include "hedgekit/sampler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hedgekit/error.hpp"
#include "hedgekit/factors.hpp"
#include "hedgekit/kernels.hpp"
#include "hedgekit/rng.hpp"

namespace hedgekit {
namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw HedgeError(ErrorCode::InvalidAlpha,
                         fmt::format("decay factor {} outside (0, 1]", alpha));
    }
}

double kolmogorov_survival(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

std::vector<double> decay_weights(std::size_t t, double alpha) {
    if (t == 0) throw HedgeError(ErrorCode::ZeroLength, "decay weights need t >= 1");
    check_alpha(alpha);
    std::vector<double> w(t);
    double term = 1.0;
    for (std::size_t i = t; i-- > 0;) {
        w[i] = term;
        term *= alpha;
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return w;
}

std::vector<double> pit_values(std::span<const double> series, double alpha, int window,
                               Execution exec) {
    if (window < 2 || series.size() <= static_cast<std::size_t>(window)) {
        throw HedgeError(ErrorCode::SeriesTooShort,
                         fmt::format("series of length {} needs to exceed window {} (>= 2)",
                                     series.size(), window));
    }
    const auto w = decay_weights(static_cast<std::size_t>(window), alpha);
    return exec == Execution::Parallel ? kernels::pit_parallel(series, w)
                                       : kernels::pit_serial(series, w);
}

KsResult ks_uniform(std::span<const double> values) {
    if (values.empty()) throw HedgeError(ErrorCode::ZeroLength, "KS test needs values");
    KsResult out;
    out.statistic = kernels::ks_statistic(std::vector<double>(values.begin(), values.end()));
    const double sqrt_n = std::sqrt(static_cast<double>(values.size()));
    out.pvalue = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * out.statistic);
    return out;
}

std::vector<double> default_decay_grid() {
    std::vector<double> grid(61);
    for (int i = 0; i < 61; ++i) grid[static_cast<std::size_t>(i)] = 0.97 + 0.0005 * i;
    grid.back() = 1.0;
    return grid;
}

DecayModel calibrate_decay(const ReturnPanel& panel, int window, std::span<const double> grid,
                           Execution exec) {
    if (grid.empty()) throw HedgeError(ErrorCode::InvalidArgument, "empty decay grid");
    for (double a : grid) check_alpha(a);
    if (window < 2 || panel.rows() <= window) {
        throw HedgeError(ErrorCode::SeriesTooShort,
                         fmt::format("panel has {} rows; calibration window {} needs more",
                                     panel.rows(), window));
    }

    const FactorDecomposition pca = pca_scores(panel.joined(), false);
    const MatrixXd ks = exec == Execution::Parallel
                            ? kernels::ks_grid_parallel(pca.scores, grid, window)
                            : kernels::ks_grid_serial(pca.scores, grid, window);

    DecayModel model;
    model.window = window;
    const double total = pca.explained_variance.sum();
    if (!(total > 0.0)) {
        throw HedgeError(ErrorCode::DegenerateCovariance, "panel has zero total variance");
    }
    const auto ncomp = static_cast<std::size_t>(pca.scores.cols());
    model.component_alphas.resize(ncomp);
    model.component_weights.resize(ncomp);
    double combined = 0.0;
    for (std::size_t c = 0; c < ncomp; ++c) {
        std::size_t best = 0;
        for (std::size_t g = 1; g < grid.size(); ++g) {
            const double cand = ks(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(g));
            const double inc = ks(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(best));
            if (cand < inc || (cand == inc && grid[g] > grid[best])) best = g;
        }
        model.component_alphas[c] = grid[best];
        model.component_weights[c] = pca.explained_variance(static_cast<Eigen::Index>(c)) / total;
        combined += model.component_weights[c] * model.component_alphas[c];
    }
    model.alpha_decay = std::min(combined, 1.0);

    std::vector<double> pooled;
    for (std::size_t c = 0; c < ncomp; ++c) {
        std::vector<double> col(static_cast<std::size_t>(pca.scores.rows()));
        for (Eigen::Index r = 0; r < pca.scores.rows(); ++r) {
            col[static_cast<std::size_t>(r)] = pca.scores(r, static_cast<Eigen::Index>(c));
        }
        const auto pit = pit_values(col, model.alpha_decay, window, exec);
        pooled.insert(pooled.end(), pit.begin(), pit.end());
    }
    const KsResult pooled_ks = ks_uniform(pooled);
    model.pit_stat = pooled_ks.statistic;
    model.pit_pvalue = pooled_ks.pvalue;
    return model;
}

ReturnPanel draw_sample(const ReturnPanel& panel, const SamplePlan& plan) {
    if (panel.rows() == 0) throw HedgeError(ErrorCode::ZeroLength, "cannot sample an empty panel");
    if (plan.n_samples == 0) throw HedgeError(ErrorCode::InvalidArgument, "n_samples must be >= 1");

    const auto weights = decay_weights(static_cast<std::size_t>(panel.rows()),
                                       plan.decay.alpha_decay);
    const auto cumulative = cumulative_sum(weights);
    Rng rng(plan.seed);

    ReturnPanel out;
    out.target_name = panel.target_name;
    out.instrument_names = panel.instrument_names;
    const auto n = static_cast<Eigen::Index>(plan.n_samples);
    out.y.resize(n);
    out.x.resize(n, panel.instruments());
    out.dates.reserve(plan.n_samples);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(rng.categorical(cumulative));
        out.y(i) = panel.y(row);
        out.x.row(i) = panel.x.row(row);
        out.dates.push_back(panel.dates[static_cast<std::size_t>(row)]);
    }
    return out;
}

}  // namespace hedgekit
