#include <doctest.h>

#include <cmath>

#include "hedgekit/error.hpp"
#include "hedgekit/factors.hpp"
#include "hedgekit/regularized.hpp"
#include "hedgekit/synth.hpp"
#include "test_support.hpp"

using namespace hedgekit;

namespace {

// Instruments with correlated columns so FA has structure to find.
ReturnPanel correlated_panel(Eigen::Index k, std::uint64_t seed) {
    ReturnPanel p = test::random_panel(k, VectorXd::Constant(5, 0.0), 0.0, seed);
    Rng rng(seed + 1000);
    MatrixXd mix(5, 5);
    for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = rng.normal();
    mix.diagonal().array() += 2.0;
    p.x = p.x * mix;
    p.y = p.x * VectorXd::LinSpaced(5, 0.1, 0.5);
    for (Eigen::Index t = 0; t < k; ++t) p.y(t) += 0.3 * rng.normal();
    return p;
}

MatrixXd centered(const MatrixXd& m) { return m.rowwise() - m.colwise().mean(); }

double max_abs_cov(const VectorXd& a, const MatrixXd& scores) {
    const VectorXd ac = a.array() - a.mean();
    const MatrixXd sc = centered(scores);
    return (sc.transpose() * ac).cwiseAbs().maxCoeff() / static_cast<double>(a.size() - 1);
}

}  // namespace

TEST_SUITE("factors") {

TEST_CASE("pca reconstruction and variance") {
    const auto p = correlated_panel(400, 1);
    const auto d = pca_scores(p);
    CHECK((d.scores * d.gamma - centered(p.x)).cwiseAbs().maxCoeff() < 1e-8);
    const double total = (centered(p.x).colwise().squaredNorm().sum()) / 399.0;
    CHECK(std::abs(d.explained_variance.sum() - total) < 1e-10 * total);
    for (Eigen::Index i = 1; i < d.explained_variance.size(); ++i) {
        CHECK(d.explained_variance(i) <= d.explained_variance(i - 1));
    }
    const MatrixXd corr = centered(d.scores).transpose() * centered(d.scores);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            CHECK(std::abs(corr(i, j)) / std::sqrt(corr(i, i) * corr(j, j)) < 1e-8);
        }
    }
}

TEST_CASE("pca of white noise spreads variance evenly") {
    const auto p = test::random_panel(20000, VectorXd::Zero(4), 0.0, 2);
    const auto d = pca_scores(p);
    CHECK(d.explained_variance.maxCoeff() / d.explained_variance.minCoeff() < 1.1);
}

TEST_CASE("perfectly correlated columns") {
    auto p = test::random_panel(100, Eigen::Vector2d(1, 1), 0.0, 3);
    p.x.col(1) = 2.0 * p.x.col(0);
    const auto loose = pca_scores(p.x, false);
    CHECK(loose.explained_variance(1) / loose.explained_variance.sum() < 1e-12);
    try {
        pca_scores(p);
        FAIL("no error");
    } catch (const HedgeError& e) {
        CHECK(e.code() == ErrorCode::DegenerateCovariance);
    }
}

TEST_CASE("regress on factors") {
    const auto p = correlated_panel(300, 4);
    auto d = pca_scores(p);
    const VectorXd a_true = VectorXd::LinSpaced(5, -1.0, 1.0);
    const VectorXd exact = d.scores * a_true;
    CHECK((regress_on_factors(d, exact) - a_true).cwiseAbs().maxCoeff() < 1e-10);

    const VectorXd alpha = regress_on_factors(d, p.y);
    const VectorXd yc = p.y.array() - p.y.mean();
    const VectorXd oracle =
        (d.scores.transpose() * d.scores).inverse() * (d.scores.transpose() * yc);
    CHECK((alpha - oracle).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(d.target_mean == doctest::Approx(p.y.mean()));

    // Residual of y on the scores is orthogonal to every score.
    const VectorXd resid = yc - d.scores * alpha;
    CHECK(regress_on_factors(d, resid).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(regress_on_factors(d, VectorXd::Zero(3)), HedgeError);
    d.scores.col(4) = d.scores.col(3);
    try {
        regress_on_factors(d, p.y);
        FAIL("no error");
    } catch (const HedgeError& e) {
        CHECK(e.code() == ErrorCode::SingularScores);
    }
}

TEST_CASE("extract hedge by hand") {
    FactorDecomposition d;
    d.gamma = MatrixXd::Identity(2, 2);
    CHECK(extract_hedge(d, Eigen::Vector2d(0.3, 0.7)) == Eigen::Vector2d(0.3, 0.7));
    d.gamma = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 4.0}};
    CHECK((extract_hedge(d, Eigen::Vector2d(1, 1)) - Eigen::Vector2d(0.5, 0.25)).norm() < 1e-15);
    d.gamma = Eigen::Matrix2d{{1.0, 1.0}, {1.0, 1.0 + 1e-12}};
    try {
        extract_hedge(d, Eigen::Vector2d(1, 1));
        FAIL("no error");
    } catch (const HedgeError& e) {
        CHECK(e.code() == ErrorCode::IllConditionedGamma);
    }
    CHECK(condition_number(MatrixXd::Identity(3, 3)) == doctest::Approx(1.0));
}

TEST_CASE("full pca hedge is ols on centered data") {
    const auto p = demeaned(correlated_panel(500, 5));
    const auto h = factor_hedge(p, FactorMethod::Pca);
    CHECK((h.beta - fit_ols(p).beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rotating the factor basis leaves beta unchanged") {
    const auto p = correlated_panel(400, 6);
    auto d = pca_scores(p);
    d.alpha = regress_on_factors(d, p.y);
    const VectorXd beta = extract_hedge(d, d.alpha);
    Rng rng(66);
    MatrixXd m(5, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    const MatrixXd r = Eigen::HouseholderQR<MatrixXd>(m).householderQ();
    FactorDecomposition rotated = d;
    rotated.scores = d.scores * r;
    rotated.gamma = r.transpose() * d.gamma;
    rotated.alpha = r.transpose() * d.alpha;
    CHECK((extract_hedge(rotated, rotated.alpha) - beta).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((regress_on_factors(rotated, p.y) - rotated.alpha).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("factor neutrality of hedged residuals") {
    const auto p = demeaned(to_returns(synth_prices({.days = 1200}), "TARGET"));
    for (FactorMethod m : {FactorMethod::Pca, FactorMethod::FaUnrotated, FactorMethod::FaVarimax}) {
        const auto h = factor_hedge(p, m);
        const VectorXd hedged = p.y - p.x * h.beta;
        CHECK(max_abs_cov(hedged, h.decomposition.scores) < 1e-8);
    }
}

TEST_CASE("varimax and unrotated fa hedge identically") {
    const auto p = correlated_panel(600, 7);
    const auto plain = factor_hedge(p, FactorMethod::FaUnrotated);
    const auto rot = factor_hedge(p, FactorMethod::FaVarimax);
    CHECK((plain.beta - rot.beta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(plain.decomposition.communalities.maxCoeff() <= 0.999);
    CHECK(rot.decomposition.rotation.rows() == 5);
    const MatrixXd rtr = rot.decomposition.rotation.transpose() * rot.decomposition.rotation;
    CHECK((rtr - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fa recovers a generative model") {
    const Eigen::Index k = 2000;
    Rng rng(8);
    MatrixXd f(k, 4), g(4, 4);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    g.diagonal().array() += 3.0;
    ReturnPanel p = test::random_panel(k, VectorXd::Zero(4), 0.0, 9);
    const double noise = 1e-4;
    p.x = f * g + noise * p.x;
    p.y = p.x.col(0);
    for (bool rotate : {false, true}) {
        const auto d = fa_fit(p, rotate);
        const MatrixXd rebuilt = d.scores * d.gamma;
        const double err = (rebuilt - centered(p.x)).cwiseAbs().maxCoeff();
        CHECK(err < 10 * noise);
    }
}

TEST_CASE("varimax criterion never decreases") {
    const auto p = correlated_panel(500, 6);
    const auto d = fa_fit(p, false);
    const VarimaxResult v = varimax(d.loadings);
    REQUIRE(!v.criterion.empty());
    CHECK(v.criterion.front() >= varimax_criterion(d.loadings) - 1e-12);
    for (std::size_t i = 1; i < v.criterion.size(); ++i) {
        CHECK(v.criterion[i] >= v.criterion[i - 1] - 1e-12);
    }
    CHECK((d.loadings * v.rotation - v.loadings).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("communalities start from smc and stay clamped") {
    auto p = correlated_panel(300, 1);
    p.x.col(4) = p.x.col(3) + 1e-3 * p.x.col(4);
    const auto d = fa_fit(p, false);
    CHECK(d.communalities.maxCoeff() <= 0.999);
    CHECK(d.communalities.minCoeff() >= 0.0);
    CHECK(d.iterations >= 1);
}

TEST_CASE("fa iteration cap") {
    const auto p = correlated_panel(300, 12);
    FaOptions o;
    o.max_iterations = 1;
    o.communality_tol = 1e-300;
    try {
        fa_fit(p, false, o);
        FAIL("no error");
    } catch (const HedgeError& e) {
        CHECK(e.code() == ErrorCode::NoConvergence);
    }
}

}
