#include "hedgekit/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "hedgekit/error.hpp"

namespace hedgekit {
namespace {

std::span<const double> as_span(const VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

VectorXd CostTable::aligned_to(const std::vector<std::string>& instruments) const {
    VectorXd out(static_cast<Eigen::Index>(instruments.size()));
    for (std::size_t i = 0; i < instruments.size(); ++i) {
        const auto it = std::find(names.begin(), names.end(), instruments[i]);
        if (it == names.end()) {
            throw HedgeError(ErrorCode::MalformedCsv,
                             fmt::format("cost table has no entry for '{}'", instruments[i]));
        }
        out(static_cast<Eigen::Index>(i)) = costs(it - names.begin());
    }
    return out;
}

double unit_cost(const CostInputs& inputs) {
    if (!(inputs.ask_price > 0.0) || !(inputs.expected_spread >= 0.0) ||
        !(inputs.funding_rate >= 0.0)) {
        throw HedgeError(ErrorCode::InvalidArgument,
                         "cost inputs need ask > 0, spread >= 0 and funding rate >= 0");
    }
    return inputs.funding_rate + inputs.expected_spread / inputs.ask_price;
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) {
        throw HedgeError(ErrorCode::LengthMismatch,
                         fmt::format("y has {} values, y_hat has {}", y.size(), y_hat.size()));
    }
    if (y.size() < 2) throw HedgeError(ErrorCode::LengthMismatch, "r_squared needs >= 2 points");
    const double n = static_cast<double>(y.size());
    double my = 0.0, mh = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i];
        mh += y_hat[i];
    }
    my /= n;
    mh /= n;
    double syy = 0.0, shh = 0.0, syh = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dy = y[i] - my;
        const double dh = y_hat[i] - mh;
        syy += dy * dy;
        shh += dh * dh;
        syh += dy * dh;
    }
    if (syy == 0.0 || shh == 0.0) return 0.0;
    return std::clamp(syh * syh / (syy * shh), 0.0, 1.0);
}

double r_squared(const VectorXd& y, const VectorXd& y_hat) {
    return r_squared(as_span(y), as_span(y_hat));
}

double quantile(std::span<const double> values, double p) {
    if (values.empty()) throw HedgeError(ErrorCode::ZeroLength, "quantile of no values");
    if (!(p >= 0.0 && p <= 1.0)) {
        throw HedgeError(ErrorCode::InvalidArgument, fmt::format("probability {} outside [0,1]", p));
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, p);
}

double var_99(std::span<const double> residuals, double total_cost) {
    if (residuals.size() < 100) {
        throw HedgeError(ErrorCode::TooFewResiduals,
                         fmt::format("VaR needs >= 100 residuals, got {}", residuals.size()));
    }
    std::vector<double> shifted(residuals.begin(), residuals.end());
    for (double& v : shifted) v += total_cost;
    std::sort(shifted.begin(), shifted.end());
    return quantile_sorted(shifted, 0.01);
}

double var_99(const VectorXd& residuals, double total_cost) {
    return var_99(as_span(residuals), total_cost);
}

ResidualSummary summarize(std::span<const double> values) {
    if (values.empty()) throw HedgeError(ErrorCode::ZeroLength, "summary of no values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return {sorted.front(), quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.5),
            quantile_sorted(sorted, 0.75), sorted.back()};
}

double hedge_cost(const VectorXd& beta, const VectorXd& costs) {
    if (beta.size() != costs.size()) {
        throw HedgeError(ErrorCode::LengthMismatch,
                         fmt::format("{} betas, {} costs", beta.size(), costs.size()));
    }
    return -costs.dot(beta.cwiseAbs());
}

EvaluationReport evaluate(const ReturnPanel& panel, const VectorXd& beta,
                          const std::optional<VectorXd>& costs) {
    if (beta.size() != panel.instruments()) {
        throw HedgeError(ErrorCode::LengthMismatch,
                         fmt::format("{} betas for {} instruments", beta.size(),
                                     panel.instruments()));
    }
    EvaluationReport report;
    report.betas = beta;
    const VectorXd fitted = panel.x * beta;
    report.residuals = panel.y - fitted;
    report.hedge_cost_total = costs ? hedge_cost(beta, *costs) : 0.0;
    report.shifted_residuals = report.residuals.array() + report.hedge_cost_total;
    report.r_squared = r_squared(panel.y, fitted);
    report.var_99 = var_99(report.residuals, report.hedge_cost_total);
    report.residual_summary = summarize(as_span(report.shifted_residuals));
    return report;
}

CostTable parse_cost_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw HedgeError(ErrorCode::MalformedCsv, "empty cost file");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line) != "variable,cost") {
        throw HedgeError(ErrorCode::MalformedCsv, "cost header must be 'variable,cost'");
    }
    CostTable table;
    std::vector<double> values;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw HedgeError(ErrorCode::MalformedCsv, fmt::format("line {}: expected 2 cells", line_no));
        }
        std::string name = trim(line.substr(0, comma));
        const std::string cell = trim(line.substr(comma + 1));
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (name.empty() || cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
            !std::isfinite(value)) {
            throw HedgeError(ErrorCode::MalformedCsv, fmt::format("line {}: bad cost row", line_no));
        }
        if (!seen.insert(name).second) {
            throw HedgeError(ErrorCode::MalformedCsv, fmt::format("cost for '{}' repeats", name));
        }
        table.names.push_back(std::move(name));
        values.push_back(value);
    }
    table.costs = Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return table;
}

CostTable load_cost_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw HedgeError(ErrorCode::MalformedCsv, fmt::format("cannot open '{}'", path.string()));
    }
    return parse_cost_csv(in);
}

}  // namespace hedgekit
