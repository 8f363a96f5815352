#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hedgekit/marketdata.hpp"

namespace hedgekit {

enum class Penalty { None, L1, L2 };

struct RegularizationSpec {
    Penalty penalty = Penalty::None;
    double lambda = 0.0;
    /// Relative unit cost per instrument. When present the penalty applies to
    /// psi_j * beta_j instead of beta_j.
    std::optional<VectorXd> costs;
    bool fit_intercept = false;
    /// Diagnostic: fit on unit-variance columns, report betas in original
    /// units. Not combinable with costs.
    bool standardize = false;
    double tol = 1e-9;
    int max_iter = 100000;
};

struct FitResult {
    VectorXd beta;
    double intercept = 0.0;
    VectorXd residuals;
    int iterations = 0;
    bool converged = true;
    /// Lasso only: objective after every full coordinate cycle.
    std::vector<double> objective_history;
};

/// Ordinary least squares through column-pivoted Householder QR. Throws
/// SingularDesign naming the dependent columns when x is rank deficient.
FitResult fit_ols(const ReturnPanel& panel, const RegularizationSpec& spec = {});

/// Solves (X'X + lambda I) beta = X'y; lambda = 0 defers to fit_ols.
FitResult fit_ridge(const ReturnPanel& panel, const RegularizationSpec& spec);

/// Minimizes 1/2 |y - X beta|^2 + lambda |beta|_1 by cyclic coordinate
/// descent on the Gram matrix. Stops when the largest coordinate move in a
/// cycle drops below spec.tol; on hitting spec.max_iter returns the last
/// iterate with converged = false. A converged iterate is polished by an exact
/// solve on its active set when the result still satisfies the optimality
/// conditions.
FitResult fit_lasso(const ReturnPanel& panel, const RegularizationSpec& spec);

/// Cost-adjusted fit: scales column j by 1/psi_j, fits the requested penalty,
/// maps the scaled coefficients back with beta_j = beta_hat_j / psi_j.
FitResult fit_with_costs(const ReturnPanel& panel, const RegularizationSpec& spec);

/// Routes to the fit matching spec.penalty and spec.costs.
FitResult fit(const ReturnPanel& panel, const RegularizationSpec& spec);

double soft_threshold(double z, double gamma);
double lasso_objective(const MatrixXd& x, const VectorXd& y, const VectorXd& beta, double lambda);

/// Cost-weighted objective sum (y - X beta)^2 + lambda sum |psi_j beta_j|^p,
/// p = 1 for L1 and 2 for L2 (0 penalty for None).
double costed_objective(const MatrixXd& x, const VectorXd& y, const VectorXd& beta,
                        const RegularizationSpec& spec);

struct CvResult {
    std::vector<double> lambdas;
    std::vector<double> scores;  ///< decay-weighted out-of-fold residual variance
    double best_lambda = 0.0;
};

/// Contiguous k-fold cross-validation over a lambda ladder. Every row is held
/// out once; its squared out-of-fold residual is weighted by
/// decay_weights(rows, decay_alpha). Ties resolve to the larger lambda.
CvResult cross_validate(const ReturnPanel& panel, RegularizationSpec spec,
                        std::span<const double> ladder, int folds, double decay_alpha = 1.0);

}  // namespace hedgekit
