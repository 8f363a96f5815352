#include "hedgekit/factors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "hedgekit/error.hpp"

namespace hedgekit {
namespace {

MatrixXd centered(const MatrixXd& data, VectorXd& means) {
    means = data.colwise().mean().transpose();
    return data.rowwise() - means.transpose();
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending, each vector
/// signed so its largest-magnitude entry is positive.
void sorted_eigen(const MatrixXd& sym, VectorXd& values, MatrixXd& vectors) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw HedgeError(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
    }
    const Eigen::Index n = sym.rows();
    values.resize(n);
    vectors.resize(n, n);
    // Eigen returns ascending order.
    for (Eigen::Index j = 0; j < n; ++j) {
        values(j) = solver.eigenvalues()(n - 1 - j);
        VectorXd v = solver.eigenvectors().col(n - 1 - j);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        vectors.col(j) = v;
    }
}

/// Least-squares coefficients B of target ~ design * B; throws `code` when the
/// design is rank deficient.
MatrixXd least_squares(const MatrixXd& design, const MatrixXd& target, ErrorCode code,
                       const char* what) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    qr.setThreshold(1e-12);
    if (qr.rank() < design.cols()) {
        throw HedgeError(code, fmt::format("{} has rank {} < {}", what, qr.rank(), design.cols()));
    }
    return qr.solve(target);
}

void check_shape(const MatrixXd& data) {
    if (data.cols() < 1) {
        throw HedgeError(ErrorCode::ZeroInstruments, "no columns to factor");
    }
    if (data.rows() <= data.cols()) {
        throw HedgeError(ErrorCode::SeriesTooShort,
                         fmt::format("need more rows ({}) than columns ({})", data.rows(),
                                     data.cols()));
    }
}

}  // namespace

std::string_view to_string(FactorMethod method) {
    switch (method) {
        case FactorMethod::Pca: return "pca";
        case FactorMethod::FaUnrotated: return "fa";
        case FactorMethod::FaVarimax: return "fa-varimax";
    }
    return "unknown";
}

FactorDecomposition pca_scores(const MatrixXd& data, bool require_invertible) {
    check_shape(data);
    FactorDecomposition out;
    out.method = FactorMethod::Pca;
    const MatrixXd xc = centered(data, out.column_means);
    const MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(data.rows() - 1);

    MatrixXd vectors;
    sorted_eigen(cov, out.explained_variance, vectors);
    out.explained_variance = out.explained_variance.cwiseMax(0.0);

    if (require_invertible) {
        const double trace = cov.trace();
        const double smallest = out.explained_variance.minCoeff();
        if (!(trace > 0.0) || smallest < 1e-12 * trace) {
            throw HedgeError(ErrorCode::DegenerateCovariance,
                             fmt::format("smallest eigenvalue {:.3e} below 1e-12 x trace {:.3e}",
                                         smallest, trace));
        }
    }
    out.scores = xc * vectors;
    out.gamma = vectors.transpose();
    return out;
}

FactorDecomposition pca_scores(const ReturnPanel& panel) { return pca_scores(panel.x, true); }

double varimax_criterion(const MatrixXd& loadings) {
    const double n = static_cast<double>(loadings.rows());
    const MatrixXd sq = loadings.array().square().matrix();
    double total = 0.0;
    for (Eigen::Index j = 0; j < sq.cols(); ++j) {
        const double s2 = sq.col(j).sum();
        const double s4 = sq.col(j).squaredNorm();
        total += (n * s4 - s2 * s2) / (n * n);
    }
    return total;
}

VarimaxResult varimax(const MatrixXd& loadings, double tol, int max_sweeps) {
    const Eigen::Index p = loadings.rows();
    const Eigen::Index m = loadings.cols();
    VarimaxResult out;
    out.rotation = MatrixXd::Identity(m, m);

    // Kaiser normalization: rotate row-normalized loadings.
    VectorXd h = loadings.rowwise().norm();
    for (Eigen::Index i = 0; i < p; ++i) {
        if (h(i) == 0.0) h(i) = 1.0;
    }
    MatrixXd x = h.cwiseInverse().asDiagonal() * loadings;
    const double n = static_cast<double>(p);

    double previous = varimax_criterion(x);
    out.criterion.push_back(previous);
    for (int sweep = 0; sweep < max_sweeps && m > 1; ++sweep) {
        for (Eigen::Index a = 0; a < m - 1; ++a) {
            for (Eigen::Index b = a + 1; b < m; ++b) {
                const VectorXd u = x.col(a).array().square() - x.col(b).array().square();
                const VectorXd v = 2.0 * x.col(a).cwiseProduct(x.col(b));
                const double A = u.sum();
                const double B = v.sum();
                const double C = u.squaredNorm() - v.squaredNorm();
                const double D = 2.0 * u.dot(v);
                const double num = D - 2.0 * A * B / n;
                const double den = C - (A * A - B * B) / n;
                const double phi = 0.25 * std::atan2(num, den);
                if (phi == 0.0) continue;
                const double c = std::cos(phi);
                const double s = std::sin(phi);
                const VectorXd xa = x.col(a);
                x.col(a) = c * xa + s * x.col(b);
                x.col(b) = -s * xa + c * x.col(b);
                const VectorXd ra = out.rotation.col(a);
                out.rotation.col(a) = c * ra + s * out.rotation.col(b);
                out.rotation.col(b) = -s * ra + c * out.rotation.col(b);
            }
        }
        const double current = varimax_criterion(x);
        out.criterion.push_back(current);
        if (std::abs(current - previous) < tol) break;
        previous = current;
    }
    out.loadings = loadings * out.rotation;
    return out;
}

FactorDecomposition fa_fit(const ReturnPanel& panel, bool rotate, const FaOptions& options) {
    check_shape(panel.x);
    const Eigen::Index k = panel.x.rows();
    const Eigen::Index n = panel.x.cols();

    FactorDecomposition out;
    out.method = rotate ? FactorMethod::FaVarimax : FactorMethod::FaUnrotated;
    const MatrixXd xc = centered(panel.x, out.column_means);
    const VectorXd sd =
        (xc.colwise().squaredNorm() / static_cast<double>(k - 1)).cwiseSqrt().transpose();
    if ((sd.array() <= 0.0).any()) {
        throw HedgeError(ErrorCode::DegenerateCovariance, "an instrument has zero variance");
    }
    const MatrixXd z = xc * sd.cwiseInverse().asDiagonal();
    const MatrixXd corr = (z.transpose() * z) / static_cast<double>(k - 1);

    Eigen::LDLT<MatrixXd> corr_ldlt(corr);
    if (corr_ldlt.info() != Eigen::Success || !corr_ldlt.isPositive() ||
        corr_ldlt.vectorD().minCoeff() <= 1e-14) {
        throw HedgeError(ErrorCode::DegenerateCovariance, "correlation matrix is singular");
    }

    // Squared multiple correlations as starting communalities.
    const MatrixXd corr_inv = corr_ldlt.solve(MatrixXd::Identity(n, n));
    VectorXd h = (1.0 - corr_inv.diagonal().cwiseInverse().array()).matrix();
    h = h.cwiseMax(0.0).cwiseMin(options.heywood_clamp);

    MatrixXd loadings(n, n);
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        MatrixXd reduced = corr;
        reduced.diagonal() = h;
        VectorXd values;
        MatrixXd vectors;
        sorted_eigen(reduced, values, vectors);
        loadings = vectors * values.cwiseMax(0.0).cwiseSqrt().asDiagonal();

        VectorXd next = loadings.rowwise().squaredNorm();
        if ((next.array() > options.heywood_clamp).any()) {
            out.heywood = true;
            next = next.cwiseMin(options.heywood_clamp);
        }
        const double change = (next - h).cwiseAbs().maxCoeff();
        h = next;
        out.iterations = it + 1;
        if (change < options.communality_tol) {
            converged = true;
            break;
        }
    }
    if (!converged || !loadings.allFinite()) {
        throw HedgeError(ErrorCode::NoConvergence,
                         fmt::format("principal-axis communalities did not settle in {} iterations",
                                     options.max_iterations));
    }
    out.communalities = h;

    // With N factors the fixed point leaves the smallest reduced eigenvalue at
    // or below zero; lift it so every factor carries a usable score.
    {
        MatrixXd reduced = corr;
        reduced.diagonal() = h;
        VectorXd values;
        MatrixXd vectors;
        sorted_eigen(reduced, values, vectors);
        const double floor = options.eigen_floor * values.maxCoeff();
        out.floored_factors = static_cast<int>((values.array() < floor).count());
        loadings = vectors * values.cwiseMax(floor).cwiseSqrt().asDiagonal();
    }

    if (rotate) {
        VarimaxResult vm = varimax(loadings, options.varimax_tol, options.max_varimax_sweeps);
        loadings = vm.loadings;
        out.rotation = vm.rotation;
        out.varimax_criterion = std::move(vm.criterion);
    } else {
        out.rotation = MatrixXd::Identity(n, n);
    }
    out.loadings = loadings;
    out.explained_variance = loadings.colwise().squaredNorm().transpose();

    // Thomson regression scores.
    out.scores = z * corr_ldlt.solve(loadings);
    // Instrument loadings in return units: least squares of X_c on the scores,
    // so the hedged residual is orthogonal to every factor.
    Eigen::ColPivHouseholderQR<MatrixXd> qr(out.scores);
    out.gamma = qr.solve(xc);
    return out;
}

VectorXd regress_on_factors(FactorDecomposition& decomp, const VectorXd& y) {
    if (y.size() != decomp.scores.rows()) {
        throw HedgeError(ErrorCode::LengthMismatch,
                         fmt::format("y has {} rows, scores have {}", y.size(),
                                     decomp.scores.rows()));
    }
    decomp.target_mean = y.mean();
    const VectorXd yc = y.array() - decomp.target_mean;
    return least_squares(decomp.scores, yc, ErrorCode::SingularScores, "factor score matrix");
}

double condition_number(const MatrixXd& m) {
    Eigen::JacobiSVD<MatrixXd> svd(m);
    const VectorXd& s = svd.singularValues();
    if (s.size() == 0) return std::numeric_limits<double>::infinity();
    const double smallest = s(s.size() - 1);
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smallest;
}

VectorXd extract_hedge(const FactorDecomposition& decomp, const VectorXd& alpha,
                       double max_condition) {
    const MatrixXd& gamma = decomp.gamma;
    if (gamma.rows() != gamma.cols() || gamma.rows() != alpha.size()) {
        throw HedgeError(ErrorCode::LengthMismatch,
                         fmt::format("gamma is {}x{}, alpha has {} entries", gamma.rows(),
                                     gamma.cols(), alpha.size()));
    }
    const double cond = condition_number(gamma);
    if (!(cond < max_condition)) {
        throw HedgeError(ErrorCode::IllConditionedGamma,
                         fmt::format("condition number {:.3e} >= {:.1e}", cond, max_condition));
    }
    return gamma.partialPivLu().solve(alpha);
}

FactorHedge factor_hedge(const ReturnPanel& panel, FactorMethod method, const FaOptions& options) {
    FactorHedge out;
    switch (method) {
        case FactorMethod::Pca: out.decomposition = pca_scores(panel); break;
        case FactorMethod::FaUnrotated: out.decomposition = fa_fit(panel, false, options); break;
        case FactorMethod::FaVarimax: out.decomposition = fa_fit(panel, true, options); break;
    }
    out.decomposition.alpha = regress_on_factors(out.decomposition, panel.y);
    out.beta = extract_hedge(out.decomposition, out.decomposition.alpha);
    return out;
}

}  // namespace hedgekit
