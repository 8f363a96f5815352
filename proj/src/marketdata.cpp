#include "hedgekit/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "hedgekit/error.hpp"

namespace hedgekit {
namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool is_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int month = std::stoi(s.substr(5, 2));
    const int day = std::stoi(s.substr(8, 2));
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

double parse_price(const std::string& cell, std::size_t line_no, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        throw HedgeError(ErrorCode::MalformedCsv,
                         fmt::format("line {}: column '{}' has unparsable value '{}'", line_no,
                                     column, cell));
    }
    if (!std::isfinite(value) || value <= 0.0) {
        throw HedgeError(ErrorCode::NonPositivePrice,
                         fmt::format("line {}: column '{}' has non-positive price {}", line_no,
                                     column, cell));
    }
    return value;
}

}  // namespace

MatrixXd ReturnPanel::joined() const {
    MatrixXd out(rows(), instruments() + 1);
    out.col(0) = y;
    out.rightCols(instruments()) = x;
    return out;
}

PricePanel parse_price_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw HedgeError(ErrorCode::MalformedCsv, "empty input");
    }
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

    std::vector<std::string> header = split_row(line);
    for (auto& h : header) h = trim(h);
    if (header.empty() || header.front() != "date") {
        throw HedgeError(ErrorCode::MalformedCsv, "first header cell must be 'date'");
    }
    if (header.size() < 2) {
        throw HedgeError(ErrorCode::MalformedCsv, "header names no instruments");
    }
    std::set<std::string> seen;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j].empty() || !seen.insert(header[j]).second) {
            throw HedgeError(ErrorCode::MalformedCsv,
                             fmt::format("header identifier '{}' is empty or repeated", header[j]));
        }
    }
    const std::size_t ncols = header.size() - 1;

    std::vector<std::string> dates;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_row(line);
        if (cells.size() != header.size()) {
            throw HedgeError(ErrorCode::MalformedCsv,
                             fmt::format("line {}: expected {} cells, found {}", line_no,
                                         header.size(), cells.size()));
        }
        std::string date = trim(cells[0]);
        if (!is_iso_date(date)) {
            throw HedgeError(ErrorCode::MalformedCsv,
                             fmt::format("line {}: '{}' is not an ISO-8601 date", line_no, date));
        }
        std::vector<double> values(ncols);
        for (std::size_t j = 0; j < ncols; ++j) {
            values[j] = parse_price(trim(cells[j + 1]), line_no, header[j + 1]);
        }
        dates.push_back(std::move(date));
        rows.push_back(std::move(values));
    }

    if (rows.size() < 2) {
        throw HedgeError(ErrorCode::FewerThanTwoRows,
                         fmt::format("need at least 2 price rows, found {}", rows.size()));
    }

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dates[a] < dates[b]; });

    PricePanel panel;
    panel.columns.assign(header.begin() + 1, header.end());
    panel.prices.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
    panel.dates.reserve(rows.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        const std::size_t src = order[r];
        if (r > 0 && dates[src] == panel.dates.back()) {
            throw HedgeError(ErrorCode::DuplicateDate, fmt::format("date {} repeats", dates[src]));
        }
        panel.dates.push_back(dates[src]);
        for (std::size_t j = 0; j < ncols; ++j) {
            panel.prices(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[src][j];
        }
    }
    return panel;
}

PricePanel load_price_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw HedgeError(ErrorCode::MalformedCsv, fmt::format("cannot open '{}'", path.string()));
    }
    return parse_price_csv(in);
}

ReturnPanel to_returns(const PricePanel& panel, const std::string& target) {
    const auto it = std::find(panel.columns.begin(), panel.columns.end(), target);
    if (it == panel.columns.end()) {
        throw HedgeError(ErrorCode::UnknownTarget, fmt::format("no column named '{}'", target));
    }
    if (panel.columns.size() < 2) {
        throw HedgeError(ErrorCode::DegeneratePanel,
                         "only the target column is present; no hedge instruments remain");
    }
    if (panel.prices.rows() < 2) {
        throw HedgeError(ErrorCode::FewerThanTwoRows, "need at least 2 price rows");
    }

    const Eigen::Index k = panel.prices.rows() - 1;
    const MatrixXd logp = panel.prices.array().log().matrix();
    const MatrixXd returns = logp.bottomRows(k) - logp.topRows(k);
    const auto target_col = static_cast<Eigen::Index>(it - panel.columns.begin());

    ReturnPanel out;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    out.target_name = target;
    out.y = returns.col(target_col);
    out.x.resize(k, returns.cols() - 1);
    Eigen::Index dst = 0;
    for (Eigen::Index j = 0; j < returns.cols(); ++j) {
        if (j == target_col) continue;
        out.x.col(dst++) = returns.col(j);
        out.instrument_names.push_back(panel.columns[static_cast<std::size_t>(j)]);
    }
    validate(out);
    return out;
}

ReturnPanel demeaned(const ReturnPanel& panel) {
    ReturnPanel out = panel;
    if (panel.rows() == 0) return out;
    out.y.array() -= panel.y.mean();
    out.x.rowwise() -= panel.x.colwise().mean();
    return out;
}

void validate(const ReturnPanel& panel) {
    if (panel.y.size() != panel.x.rows() ||
        static_cast<std::size_t>(panel.y.size()) != panel.dates.size()) {
        throw HedgeError(ErrorCode::LengthMismatch,
                         fmt::format("y has {} rows, x has {}, dates has {}", panel.y.size(),
                                     panel.x.rows(), panel.dates.size()));
    }
    if (static_cast<std::size_t>(panel.x.cols()) != panel.instrument_names.size()) {
        throw HedgeError(ErrorCode::LengthMismatch, "instrument_names does not match x columns");
    }
    if (std::find(panel.instrument_names.begin(), panel.instrument_names.end(),
                  panel.target_name) != panel.instrument_names.end()) {
        throw HedgeError(ErrorCode::DegeneratePanel, "target appears among instruments");
    }
    if (!panel.y.allFinite() || !panel.x.allFinite()) {
        throw HedgeError(ErrorCode::MalformedCsv, "return panel contains non-finite entries");
    }
}

}  // namespace hedgekit
