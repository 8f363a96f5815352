#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hedgekit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Wide-format price history: rows are dates (ascending), columns are
/// instruments. Every price is strictly positive.
struct PricePanel {
    std::vector<std::string> dates;
    std::vector<std::string> columns;
    MatrixXd prices;
};

/// Aligned log returns with the target split out from the hedge instruments.
/// Row t of `x` and entry t of `y` belong to dates[t].
struct ReturnPanel {
    std::vector<std::string> dates;
    std::string target_name;
    VectorXd y;
    MatrixXd x;
    std::vector<std::string> instrument_names;

    Eigen::Index rows() const { return y.size(); }
    Eigen::Index instruments() const { return x.cols(); }

    /// [y | x] as a single k x (N+1) matrix.
    MatrixXd joined() const;
};

/// Parses `date,<id1>,...,<idN>` CSV text. Rows are sorted ascending by date.
PricePanel parse_price_csv(std::istream& in);
PricePanel load_price_csv(const std::filesystem::path& path);

/// Log returns ln(p[t+1]/p[t]) with `target` extracted into y.
ReturnPanel to_returns(const PricePanel& panel, const std::string& target);

/// Subtracts each column mean from y and from every column of x.
ReturnPanel demeaned(const ReturnPanel& panel);

/// Validates the ReturnPanel invariants (aligned lengths, finite values,
/// target not among instruments). Throws HedgeError on violation.
void validate(const ReturnPanel& panel);

}  // namespace hedgekit
