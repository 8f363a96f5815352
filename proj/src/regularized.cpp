#include "hedgekit/regularized.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "hedgekit/error.hpp"
#include "hedgekit/sampler.hpp"

namespace hedgekit {
namespace {

/// Design and target after optional centering (for the unpenalized intercept).
struct Prepared {
    MatrixXd x;
    VectorXd y;
    VectorXd x_mean;
    double y_mean = 0.0;
};

Prepared prepare(const ReturnPanel& panel, bool fit_intercept) {
    Prepared p;
    if (fit_intercept) {
        p.x_mean = panel.x.colwise().mean().transpose();
        p.y_mean = panel.y.mean();
        p.x = panel.x.rowwise() - p.x_mean.transpose();
        p.y = panel.y.array() - p.y_mean;
    } else {
        p.x_mean = VectorXd::Zero(panel.x.cols());
        p.x = panel.x;
        p.y = panel.y;
    }
    return p;
}

void finish(FitResult& fit, const ReturnPanel& panel, const Prepared& p, bool fit_intercept) {
    fit.intercept = fit_intercept ? p.y_mean - p.x_mean.dot(fit.beta) : 0.0;
    fit.residuals = (panel.y - panel.x * fit.beta).array() - fit.intercept;
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw HedgeError(ErrorCode::InvalidArgument, fmt::format("lambda {} must be >= 0", lambda));
    }
}

void check_panel(const ReturnPanel& panel) {
    if (panel.instruments() == 0) throw HedgeError(ErrorCode::ZeroInstruments, "no instruments");
    if (panel.rows() == 0) throw HedgeError(ErrorCode::ZeroLength, "empty panel");
}

/// Exact minimizer on the sign pattern of `beta`, accepted only if it keeps
/// the signs and every inactive coordinate satisfies |c_j - G_jA b| <= lambda.
bool polish_active_set(const MatrixXd& gram, const VectorXd& xty, double lambda, VectorXd& beta) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta(j) != 0.0) active.push_back(j);
    }
    if (active.empty()) return false;
    const auto m = static_cast<Eigen::Index>(active.size());
    MatrixXd g(m, m);
    VectorXd rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index ja = active[static_cast<std::size_t>(a)];
        rhs(a) = xty(ja) - lambda * (beta(ja) > 0.0 ? 1.0 : -1.0);
        for (Eigen::Index b = 0; b < m; ++b) g(a, b) = gram(ja, active[static_cast<std::size_t>(b)]);
    }
    Eigen::LDLT<MatrixXd> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const VectorXd solved = ldlt.solve(rhs);
    if (!solved.allFinite()) return false;

    VectorXd candidate = VectorXd::Zero(beta.size());
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index ja = active[static_cast<std::size_t>(a)];
        if ((solved(a) > 0.0) != (beta(ja) > 0.0) || solved(a) == 0.0) return false;
        candidate(ja) = solved(a);
    }
    const VectorXd grad = xty - gram * candidate;
    const double slack = 1e-12 * std::max(1.0, xty.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (candidate(j) == 0.0 && std::abs(grad(j)) > lambda + slack) return false;
    }
    beta = candidate;
    return true;
}

ReturnPanel with_design(const ReturnPanel& panel, MatrixXd x) {
    ReturnPanel out;
    out.y = panel.y;
    out.x = std::move(x);
    return out;
}

FitResult fit_standardized(const ReturnPanel& panel, RegularizationSpec spec) {
    if (spec.costs) {
        throw HedgeError(ErrorCode::InvalidArgument, "standardize cannot be combined with costs");
    }
    const Eigen::Index k = panel.rows();
    const MatrixXd centered = panel.x.rowwise() - panel.x.colwise().mean();
    VectorXd sd = (centered.colwise().squaredNorm() / static_cast<double>(std::max<Eigen::Index>(k - 1, 1)))
                      .cwiseSqrt()
                      .transpose();
    for (Eigen::Index j = 0; j < sd.size(); ++j) {
        if (!(sd(j) > 0.0)) sd(j) = 1.0;
    }
    spec.standardize = false;
    FitResult scaled = fit(with_design(panel, panel.x * sd.cwiseInverse().asDiagonal()), spec);
    FitResult out = std::move(scaled);
    out.beta = out.beta.cwiseQuotient(sd);
    out.residuals = (panel.y - panel.x * out.beta).array() - out.intercept;
    return out;
}

}  // namespace

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

double lasso_objective(const MatrixXd& x, const VectorXd& y, const VectorXd& beta, double lambda) {
    return 0.5 * (y - x * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

double costed_objective(const MatrixXd& x, const VectorXd& y, const VectorXd& beta,
                        const RegularizationSpec& spec) {
    const VectorXd psi = spec.costs ? *spec.costs : VectorXd::Ones(beta.size());
    const VectorXd weighted = psi.cwiseProduct(beta);
    switch (spec.penalty) {
        case Penalty::L1:
            return 0.5 * (y - x * beta).squaredNorm() + spec.lambda * weighted.lpNorm<1>();
        case Penalty::L2:
            return (y - x * beta).squaredNorm() + spec.lambda * weighted.squaredNorm();
        case Penalty::None:
            return (y - x * beta).squaredNorm();
    }
    return 0.0;
}

FitResult fit_ols(const ReturnPanel& panel, const RegularizationSpec& spec) {
    check_panel(panel);
    const Prepared p = prepare(panel, spec.fit_intercept);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(p.x);
    qr.setThreshold(1e-10);
    const Eigen::Index n = p.x.cols();
    if (qr.rank() < n) {
        std::vector<Eigen::Index> dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < n; ++j) dependent.push_back(perm(j));
        std::sort(dependent.begin(), dependent.end());
        std::vector<std::string> names;
        for (Eigen::Index j : dependent) {
            const auto u = static_cast<std::size_t>(j);
            names.push_back(u < panel.instrument_names.size() ? panel.instrument_names[u]
                                                              : fmt::format("#{}", j));
        }
        throw HedgeError(ErrorCode::SingularDesign,
                         fmt::format("design has rank {} < {}; linearly dependent column(s) {}",
                                     qr.rank(), n, fmt::join(names, ", ")));
    }
    FitResult out;
    out.beta = qr.solve(p.y);
    finish(out, panel, p, spec.fit_intercept);
    return out;
}

FitResult fit_ridge(const ReturnPanel& panel, const RegularizationSpec& spec) {
    check_lambda(spec.lambda);
    if (spec.lambda == 0.0) return fit_ols(panel, spec);
    check_panel(panel);
    const Prepared p = prepare(panel, spec.fit_intercept);
    MatrixXd system = p.x.transpose() * p.x;
    system.diagonal().array() += spec.lambda;
    FitResult out;
    out.beta = system.llt().solve(p.x.transpose() * p.y);
    finish(out, panel, p, spec.fit_intercept);
    return out;
}

FitResult fit_lasso(const ReturnPanel& panel, const RegularizationSpec& spec) {
    check_lambda(spec.lambda);
    check_panel(panel);
    const Prepared p = prepare(panel, spec.fit_intercept);
    const Eigen::Index n = p.x.cols();
    const MatrixXd gram = p.x.transpose() * p.x;
    const VectorXd xty = p.x.transpose() * p.y;
    const double yty = p.y.squaredNorm();
    const double lambda = spec.lambda;

    FitResult out;
    out.beta = VectorXd::Zero(n);
    VectorXd grad = xty;  // X'y - G beta
    auto objective = [&](const VectorXd& b) {
        return 0.5 * (yty - 2.0 * xty.dot(b) + b.dot(gram * b)) + lambda * b.lpNorm<1>();
    };

    out.converged = false;
    for (int cycle = 0; cycle < spec.max_iter; ++cycle) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double gjj = gram(j, j);
            const double old = out.beta(j);
            const double updated = gjj > 0.0 ? soft_threshold(grad(j) + gjj * old, lambda) / gjj : 0.0;
            const double delta = updated - old;
            if (delta != 0.0) {
                out.beta(j) = updated;
                grad -= gram.col(j) * delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        out.iterations = cycle + 1;
        out.objective_history.push_back(objective(out.beta));
        if (max_change < spec.tol) {
            out.converged = true;
            break;
        }
    }
    if (out.converged) polish_active_set(gram, xty, lambda, out.beta);
    finish(out, panel, p, spec.fit_intercept);
    return out;
}

FitResult fit_with_costs(const ReturnPanel& panel, const RegularizationSpec& spec) {
    if (!spec.costs) {
        throw HedgeError(ErrorCode::InvalidArgument, "fit_with_costs called without costs");
    }
    const VectorXd& psi = *spec.costs;
    if (psi.size() != panel.instruments()) {
        throw HedgeError(ErrorCode::LengthMismatch,
                         fmt::format("{} costs for {} instruments", psi.size(),
                                     panel.instruments()));
    }
    for (Eigen::Index j = 0; j < psi.size(); ++j) {
        if (!(psi(j) > 0.0) || !std::isfinite(psi(j))) {
            throw HedgeError(ErrorCode::NonPositiveCost,
                             fmt::format("cost of instrument {} is {}", j, psi(j)));
        }
    }
    if (spec.standardize) {
        throw HedgeError(ErrorCode::InvalidArgument, "standardize cannot be combined with costs");
    }

    RegularizationSpec inner = spec;
    inner.costs.reset();
    const ReturnPanel scaled = with_design(panel, panel.x * psi.cwiseInverse().asDiagonal());
    FitResult out = fit(scaled, inner);
    out.beta = out.beta.cwiseQuotient(psi);
    out.residuals = (panel.y - panel.x * out.beta).array() - out.intercept;
    return out;
}

FitResult fit(const ReturnPanel& panel, const RegularizationSpec& spec) {
    if (spec.costs) return fit_with_costs(panel, spec);
    if (spec.standardize) return fit_standardized(panel, spec);
    switch (spec.penalty) {
        case Penalty::None: return fit_ols(panel, spec);
        case Penalty::L1: return fit_lasso(panel, spec);
        case Penalty::L2: return fit_ridge(panel, spec);
    }
    throw HedgeError(ErrorCode::InvalidArgument, "unknown penalty");
}

CvResult cross_validate(const ReturnPanel& panel, RegularizationSpec spec,
                        std::span<const double> ladder, int folds, double decay_alpha) {
    if (ladder.empty()) throw HedgeError(ErrorCode::InvalidArgument, "empty lambda ladder");
    const Eigen::Index k = panel.rows();
    if (folds < 2 || folds > k) {
        throw HedgeError(ErrorCode::InvalidArgument,
                         fmt::format("fold count {} must be in [2, {}]", folds, k));
    }
    const auto weights = decay_weights(static_cast<std::size_t>(k), decay_alpha);

    CvResult out;
    out.lambdas.assign(ladder.begin(), ladder.end());
    for (double lambda : ladder) {
        spec.lambda = lambda;
        double weighted = 0.0;
        for (int f = 0; f < folds; ++f) {
            const Eigen::Index begin = k * f / folds;
            const Eigen::Index end = k * (f + 1) / folds;
            ReturnPanel train;
            train.y.resize(k - (end - begin));
            train.x.resize(train.y.size(), panel.instruments());
            Eigen::Index r = 0;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (i >= begin && i < end) continue;
                train.y(r) = panel.y(i);
                train.x.row(r) = panel.x.row(i);
                ++r;
            }
            const FitResult fitted = fit(train, spec);
            for (Eigen::Index i = begin; i < end; ++i) {
                const double resid = panel.y(i) - fitted.intercept - panel.x.row(i).dot(fitted.beta);
                weighted += weights[static_cast<std::size_t>(i)] * resid * resid;
            }
        }
        out.scores.push_back(weighted);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.scores.size(); ++i) {
        if (out.scores[i] < out.scores[best] ||
            (out.scores[i] == out.scores[best] && out.lambdas[i] > out.lambdas[best])) {
            best = i;
        }
    }
    out.best_lambda = out.lambdas[best];
    return out;
}

}  // namespace hedgekit
