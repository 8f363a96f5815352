#include "hedgekit/synth.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <fmt/format.h>

#include "hedgekit/error.hpp"
#include "hedgekit/rng.hpp"

namespace hedgekit {
namespace {

constexpr int kInstruments = 10;
constexpr int kFactors = 3;
constexpr int kDuplicateOf = 3;   // H04
constexpr int kDuplicate = 4;     // H05

// Factor exposures (market, sector, style) per instrument.
constexpr std::array<std::array<double, kFactors>, kInstruments> kLoadings{{
    {1.10, 0.60, 0.10},
    {1.20, 0.70, -0.20},
    {0.80, -0.20, 0.30},
    {1.05, 0.80, -0.10},
    {1.05, 0.80, -0.10},  // replaced by the near-duplicate construction
    {0.60, -0.40, 0.20},
    {1.00, -0.10, 0.60},
    {1.00, 0.55, -0.25},
    {0.70, -0.30, 0.10},
    {0.90, -0.50, 0.70},
}};
constexpr std::array<double, kFactors> kFactorVol{0.0090, 0.0050, 0.0040};
constexpr std::array<double, kInstruments> kIdioVol{0.0110, 0.0130, 0.0070, 0.0090, 0.0090,
                                                    0.0080, 0.0100, 0.0085, 0.0095, 0.0120};
constexpr std::array<double, kInstruments> kDrift{0.0006, 0.0007, 0.0003, 0.0005, 0.0005,
                                                  0.0002, 0.0004, 0.0006, 0.0005, 0.0001};
constexpr std::array<double, kInstruments> kBetas{0.13, 0.09, 0.25, 0.01, 0.05,
                                                  0.09, 0.15, 0.12, 0.02, 0.06};
constexpr std::array<double, kInstruments> kFunding{0.00020, 0.00005, 0.00030, 0.00010, 0.00015,
                                                    0.00012, 0.00010, 0.00025, 0.00016, 0.00011};
constexpr std::array<double, kInstruments> kSpread{0.050, 0.004, 0.180, 0.040, 0.060,
                                                   0.030, 0.025, 0.110, 0.060, 0.018};
constexpr std::array<double, kInstruments> kAsk{150.0, 130.0, 320.0, 220.0, 210.0,
                                                165.0, 150.0, 290.0, 300.0, 110.0};

std::string instrument_name(int j) { return fmt::format("H{:02d}", j + 1); }

/// Rows map independent unit normals [factors..., idiosyncratic...] to
/// instrument returns.
MatrixXd mixing_matrix(double duplicate_correlation) {
    MatrixXd m = MatrixXd::Zero(kInstruments, kFactors + kInstruments);
    for (int j = 0; j < kInstruments; ++j) {
        for (int f = 0; f < kFactors; ++f) {
            m(j, f) = kLoadings[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)] *
                      kFactorVol[static_cast<std::size_t>(f)];
        }
        m(j, kFactors + j) = kIdioVol[static_cast<std::size_t>(j)];
    }
    const double rho = duplicate_correlation;
    const double sd = m.row(kDuplicateOf).norm();
    m.row(kDuplicate) = rho * m.row(kDuplicateOf);
    m(kDuplicate, kFactors + kDuplicate) = std::sqrt(1.0 - rho * rho) * sd;
    return m;
}

std::vector<std::string> weekdays(const std::string& start, std::size_t count) {
    using namespace std::chrono;
    int y = 0;
    unsigned mo = 0, d = 0;
    if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &mo, &d) != 3) {
        throw HedgeError(ErrorCode::InvalidArgument, "start date must be YYYY-MM-DD");
    }
    sys_days day{year{y} / month{mo} / std::chrono::day{d}};
    std::vector<std::string> out;
    out.reserve(count);
    while (out.size() < count) {
        const weekday wd{day};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day ymd{day};
            out.push_back(fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                                      static_cast<unsigned>(ymd.month()),
                                      static_cast<unsigned>(ymd.day())));
        }
        day += days{1};
    }
    return out;
}

}  // namespace

VectorXd synth_true_betas() {
    return Eigen::Map<const VectorXd>(kBetas.data(), kInstruments);
}

PricePanel synth_prices(const SynthConfig& config) {
    if (config.days < 2) throw HedgeError(ErrorCode::InvalidArgument, "need at least 2 days");
    if (!(config.duplicate_correlation > 0.0 && config.duplicate_correlation < 1.0)) {
        throw HedgeError(ErrorCode::InvalidArgument, "duplicate correlation must be in (0, 1)");
    }
    if (!(config.target_r_squared > 0.0 && config.target_r_squared < 1.0)) {
        throw HedgeError(ErrorCode::InvalidArgument, "target R^2 must be in (0, 1)");
    }
    const MatrixXd mix = mixing_matrix(config.duplicate_correlation);
    const VectorXd beta = synth_true_betas();
    const MatrixXd cov = mix * mix.transpose();
    const double fit_var = beta.dot(cov * beta);
    const double noise_sd =
        std::sqrt(fit_var * (1.0 - config.target_r_squared) / config.target_r_squared);

    Rng rng(config.seed);
    const auto rows = static_cast<Eigen::Index>(config.days);
    PricePanel panel;
    panel.dates = weekdays(config.start_date, config.days);
    panel.columns.push_back(config.target_name);
    for (int j = 0; j < kInstruments; ++j) panel.columns.push_back(instrument_name(j));
    panel.prices.resize(rows, kInstruments + 1);
    panel.prices.row(0).setConstant(100.0);

    VectorXd shocks(kFactors + kInstruments);
    for (Eigen::Index t = 1; t < rows; ++t) {
        for (Eigen::Index i = 0; i < shocks.size(); ++i) shocks(i) = rng.normal();
        VectorXd r = mix * shocks;
        for (int j = 0; j < kInstruments; ++j) r(j) += kDrift[static_cast<std::size_t>(j)];
        const double target = beta.dot(r) + noise_sd * rng.normal();
        panel.prices(t, 0) = panel.prices(t - 1, 0) * std::exp(target);
        for (int j = 0; j < kInstruments; ++j) {
            panel.prices(t, j + 1) = panel.prices(t - 1, j + 1) * std::exp(r(j));
        }
    }
    return panel;
}

CostTable synth_costs(const SynthConfig&) {
    CostTable table;
    table.costs.resize(kInstruments);
    for (int j = 0; j < kInstruments; ++j) {
        const auto s = static_cast<std::size_t>(j);
        table.names.push_back(instrument_name(j));
        table.costs(j) = unit_cost({kFunding[s], kSpread[s], kAsk[s]});
    }
    return table;
}

void write_price_csv(std::ostream& out, const PricePanel& panel) {
    out << "date";
    for (const auto& c : panel.columns) out << ',' << c;
    out << '\n';
    for (Eigen::Index r = 0; r < panel.prices.rows(); ++r) {
        out << panel.dates[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < panel.prices.cols(); ++c) {
            out << ',' << fmt::format("{:.8f}", panel.prices(r, c));
        }
        out << '\n';
    }
}

void write_cost_csv(std::ostream& out, const CostTable& costs) {
    out << "variable,cost\n";
    for (std::size_t i = 0; i < costs.names.size(); ++i) {
        out << costs.names[i] << ',' << fmt::format("{:.6f}", costs.costs(static_cast<Eigen::Index>(i)))
            << '\n';
    }
}

}  // namespace hedgekit
