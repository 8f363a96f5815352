#include "hedgekit/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hedgekit/sampler.hpp"

namespace hedgekit::kernels {
namespace {

inline double pit_at(std::span<const double> series, std::span<const double> weights,
                     std::size_t t) {
    const std::size_t window = weights.size();
    const double value = series[t];
    const double* past = series.data() + (t - window);
    double below = 0.0;
    double tied = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        if (past[i] < value) {
            below += weights[i];
        } else if (past[i] == value) {
            tied += weights[i];
        }
    }
    return std::clamp(below + 0.5 * tied, 0.0, 1.0);
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
    return out;
}

}  // namespace

std::vector<double> pit_serial(std::span<const double> series, std::span<const double> weights) {
    const std::size_t window = weights.size();
    std::vector<double> out(series.size() - window);
    for (std::size_t t = window; t < series.size(); ++t) {
        out[t - window] = pit_at(series, weights, t);
    }
    return out;
}

std::vector<double> pit_parallel(std::span<const double> series, std::span<const double> weights) {
    const auto window = static_cast<std::ptrdiff_t>(weights.size());
    const auto n = static_cast<std::ptrdiff_t>(series.size());
    std::vector<double> out(static_cast<std::size_t>(n - window));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = window; t < n; ++t) {
        out[static_cast<std::size_t>(t - window)] =
            pit_at(series, weights, static_cast<std::size_t>(t));
    }
    return out;
}

double ks_statistic(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, hi - values[i], values[i] - lo});
    }
    return d;
}

Eigen::MatrixXd ks_grid_serial(const Eigen::MatrixXd& series, std::span<const double> grid,
                               int window) {
    Eigen::MatrixXd out(series.cols(), static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index c = 0; c < series.cols(); ++c) {
        const std::vector<double> col = column(series, c);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto w = decay_weights(static_cast<std::size_t>(window), grid[g]);
            out(c, static_cast<Eigen::Index>(g)) = ks_statistic(pit_serial(col, w));
        }
    }
    return out;
}

Eigen::MatrixXd ks_grid_parallel(const Eigen::MatrixXd& series, std::span<const double> grid,
                                 int window) {
    const auto ncols = series.cols();
    const auto ngrid = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd out(ncols, ngrid);
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(ncols));
    for (Eigen::Index c = 0; c < ncols; ++c) cols[static_cast<std::size_t>(c)] = column(series, c);

    const Eigen::Index pairs = ncols * ngrid;
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index p = 0; p < pairs; ++p) {
        const Eigen::Index c = p / ngrid;
        const Eigen::Index g = p % ngrid;
        const auto w =
            decay_weights(static_cast<std::size_t>(window), grid[static_cast<std::size_t>(g)]);
        out(c, g) = ks_statistic(pit_serial(cols[static_cast<std::size_t>(c)], w));
    }
    return out;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace hedgekit::kernels
