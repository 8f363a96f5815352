#pragma once

// Hot loops of decay calibration. Each kernel exists twice: a plain serial
// reference and an OpenMP version. The two must agree bit for bit because
// every output element is computed independently; tests enforce this and
// bench/ compares their speed.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hedgekit::kernels {

/// Decay-weighted empirical CDF of series[t] against the `weights.size()`
/// preceding observations (oldest first), midpoint convention at ties.
/// One value per t in [window, series.size()).
std::vector<double> pit_serial(std::span<const double> series, std::span<const double> weights);
std::vector<double> pit_parallel(std::span<const double> series, std::span<const double> weights);

/// Two-sided KS distance of `values` from U(0,1). Sorts a copy.
double ks_statistic(std::vector<double> values);

/// KS statistic of pit values for every (series column, grid alpha) pair.
/// Result is columns x grid.
Eigen::MatrixXd ks_grid_serial(const Eigen::MatrixXd& series, std::span<const double> grid,
                               int window);
Eigen::MatrixXd ks_grid_parallel(const Eigen::MatrixXd& series, std::span<const double> grid,
                                 int window);

int max_threads();

}  // namespace hedgekit::kernels
