#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hedgekit/marketdata.hpp"

namespace hedgekit {

/// Inputs of the per-unit hedging cost: funding rate plus expected bid-ask
/// spread relative to the ask price.
struct CostInputs {
    double funding_rate = 0.0;
    double expected_spread = 0.0;
    double ask_price = 1.0;
};

/// Five-number summary (boxplot hinges use the same quantile rule as VaR).
struct ResidualSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct EvaluationReport {
    double r_squared = 0.0;
    double hedge_cost_total = 0.0;  ///< <= 0, deterministic PnL drag
    double var_99 = 0.0;            ///< 1% quantile of residual + cost
    ResidualSummary residual_summary;
    VectorXd betas;
    VectorXd residuals;             ///< raw y - X beta
    VectorXd shifted_residuals;     ///< residuals + hedge_cost_total
};

struct CostTable {
    std::vector<std::string> names;
    VectorXd costs;

    /// Costs reordered to `instruments`; throws if any is missing.
    VectorXd aligned_to(const std::vector<std::string>& instruments) const;
};

double unit_cost(const CostInputs& inputs);

/// Squared Pearson correlation; 0 when either series is constant.
double r_squared(std::span<const double> y, std::span<const double> y_hat);
double r_squared(const VectorXd& y, const VectorXd& y_hat);

/// Quantile with linear interpolation between order statistics: for sorted
/// x[0..n-1], h = (n - 1) p and Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile(std::span<const double> values, double p);

/// 1% quantile of residuals + total_cost. Needs at least 100 residuals.
double var_99(std::span<const double> residuals, double total_cost);
double var_99(const VectorXd& residuals, double total_cost);

ResidualSummary summarize(std::span<const double> values);

/// -sum_j psi_j |beta_j|.
double hedge_cost(const VectorXd& beta, const VectorXd& costs);

EvaluationReport evaluate(const ReturnPanel& panel, const VectorXd& beta,
                          const std::optional<VectorXd>& costs = std::nullopt);

/// `variable,cost` CSV.
CostTable parse_cost_csv(std::istream& in);
CostTable load_cost_csv(const std::filesystem::path& path);

}  // namespace hedgekit
