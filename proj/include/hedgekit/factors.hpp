#pragma once

#include <string_view>
#include <vector>

#include "hedgekit/marketdata.hpp"

namespace hedgekit {

enum class FactorMethod { Pca, FaUnrotated, FaVarimax };

std::string_view to_string(FactorMethod method);

/// Linear common-factor model of the instruments, X_c ~ scores * gamma, with
/// the target loadings alpha filled in by regress_on_factors.
struct FactorDecomposition {
    MatrixXd scores;               ///< k x N factor series
    MatrixXd gamma;                ///< N x N instrument loadings
    VectorXd alpha;                ///< N target loadings (empty until regressed)
    VectorXd explained_variance;   ///< PCA eigenvalues, or FA variance per factor
    FactorMethod method = FactorMethod::Pca;

    VectorXd column_means;         ///< removed from the instruments before factoring
    double target_mean = 0.0;      ///< removed from y by regress_on_factors

    // Factor-analysis diagnostics.
    MatrixXd loadings;             ///< standardized loadings (after rotation, if any)
    MatrixXd rotation;             ///< varimax rotation applied to the loadings
    VectorXd communalities;
    bool heywood = false;          ///< a communality hit the 0.999 clamp
    int floored_factors = 0;       ///< FA factors whose eigenvalue was lifted to the floor
    int iterations = 0;
    std::vector<double> varimax_criterion;  ///< criterion after each sweep
};

struct FaOptions {
    double communality_tol = 1e-6;
    int max_iterations = 200;
    double heywood_clamp = 0.999;
    double eigen_floor = 1e-6;  ///< final loadings keep every factor at >= floor * largest eigenvalue
    double varimax_tol = 1e-8;
    int max_varimax_sweeps = 1000;
};

struct VarimaxResult {
    MatrixXd loadings;   ///< rotated loadings
    MatrixXd rotation;   ///< orthogonal N x N, loadings_in * rotation = loadings
    std::vector<double> criterion;
};

/// PCA of the sample covariance of `data` (rows = observations). All
/// components are retained, eigenvalues descending, each eigenvector signed so
/// its largest-magnitude entry is positive. When `require_invertible` is set a
/// component carrying less than 1e-12 of the trace raises DegenerateCovariance.
FactorDecomposition pca_scores(const MatrixXd& data, bool require_invertible = true);
FactorDecomposition pca_scores(const ReturnPanel& panel);

/// Iterated principal-axis factoring with N factors on the correlation matrix,
/// Thomson regression scores, optional Kaiser-normalized varimax.
FactorDecomposition fa_fit(const ReturnPanel& panel, bool rotate, const FaOptions& options = {});

/// Kaiser-normalized varimax by pairwise planar rotations.
VarimaxResult varimax(const MatrixXd& loadings, double tol = 1e-8, int max_sweeps = 1000);
double varimax_criterion(const MatrixXd& loadings);

/// Least-squares loadings of demeaned y on the factor scores (no intercept).
/// Records the removed mean in decomp.target_mean.
VectorXd regress_on_factors(FactorDecomposition& decomp, const VectorXd& y);

/// Solves gamma * beta = alpha. Throws IllConditionedGamma when
/// cond(gamma) >= max_condition.
VectorXd extract_hedge(const FactorDecomposition& decomp, const VectorXd& alpha,
                       double max_condition = 1e10);

/// 2-norm condition number via SVD; infinity for a singular matrix.
double condition_number(const MatrixXd& m);

struct FactorHedge {
    FactorDecomposition decomposition;
    VectorXd beta;
};

/// Decomposition, target regression and hedge extraction in one call.
FactorHedge factor_hedge(const ReturnPanel& panel, FactorMethod method,
                         const FaOptions& options = {});

}  // namespace hedgekit
