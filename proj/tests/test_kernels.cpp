#include <doctest.h>

#include "hedgekit/kernels.hpp"
#include "hedgekit/rng.hpp"
#include "hedgekit/sampler.hpp"

using namespace hedgekit;

TEST_SUITE("kernels") {

TEST_CASE("pit serial and parallel agree bitwise") {
    Rng rng(77);
    std::vector<double> s(3000);
    for (auto& v : s) v = rng.normal();
    for (double alpha : {1.0, 0.985, 0.9}) {
        const auto w = decay_weights(250, alpha);
        CHECK(kernels::pit_serial(s, w) == kernels::pit_parallel(s, w));
    }
}

TEST_CASE("ks grid serial and parallel agree bitwise") {
    Rng rng(78);
    Eigen::MatrixXd series(1200, 5);
    for (Eigen::Index i = 0; i < series.size(); ++i) series.data()[i] = rng.normal();
    const auto grid = default_decay_grid();
    const Eigen::MatrixXd a = kernels::ks_grid_serial(series, grid, 100);
    const Eigen::MatrixXd b = kernels::ks_grid_parallel(series, grid, 100);
    REQUIRE(a.rows() == 5);
    REQUIRE(a.cols() == 61);
    CHECK(a == b);
}

TEST_CASE("ks statistic matches the sampler") {
    Rng rng(79);
    std::vector<double> u(500);
    for (auto& v : u) v = rng.uniform();
    CHECK(kernels::ks_statistic(u) == ks_uniform(u).statistic);
    CHECK(kernels::max_threads() >= 1);
}

}
