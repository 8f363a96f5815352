// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "hedgekit/betavae.hpp"
#include "hedgekit/eval.hpp"
#include "hedgekit/factors.hpp"
#include "hedgekit/pipeline.hpp"
#include "hedgekit/regularized.hpp"
#include "hedgekit/sampler.hpp"
#include "hedgekit/synth.hpp"
#include "test_support.hpp"

using namespace hedgekit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

double max_abs_diff(const VectorXd& a, const VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

fs::path synth_dir() {
    static const fs::path dir = [] {
        const fs::path d = test::scratch_dir("acceptance_synth");
        std::ofstream prices(d / "prices.csv", std::ios::binary);
        write_price_csv(prices, synth_prices());
        std::ofstream costs(d / "costs.csv", std::ios::binary);
        write_cost_csv(costs, synth_costs());
        return d;
    }();
    return dir;
}

/// The demeaned k = 1000 sample the compare pipeline fits on.
const PreparedData& synthetic_sample() {
    static const PreparedData data = [] {
        RunConfig c;
        c.prices_path = synth_dir() / "prices.csv";
        c.costs_path = synth_dir() / "costs.csv";
        c.target = "TARGET";
        return prepare_data(c);
    }();
    return data;
}

RegularizationSpec penalty(Penalty p, double lambda) {
    RegularizationSpec s;
    s.penalty = p;
    s.lambda = lambda;
    return s;
}

Outcome equivalence_ladder() {
    Outcome o;
    const ReturnPanel& p = synthetic_sample().sample;
    o.require(p.rows() == 1000 && p.instruments() == 10, "sample shape");
    const VectorXd ols = fit_ols(p).beta;
    const double d_lasso = max_abs_diff(fit_lasso(p, penalty(Penalty::L1, 0.0)).beta, ols);
    const double d_ridge = max_abs_diff(fit_ridge(p, penalty(Penalty::L2, 0.0)).beta, ols);
    const double d_pca = max_abs_diff(factor_hedge(p, FactorMethod::Pca).beta, ols);
    o.note(fmt::format("max|diff| lasso {:.1e} ridge {:.1e} pca {:.1e}", d_lasso, d_ridge, d_pca));
    o.require(d_lasso < 1e-6, "lasso(0) vs ols");
    o.require(d_ridge < 1e-6, "ridge(0) vs ols");
    o.require(d_pca < 1e-6, "full pca vs ols");
    return o;
}

Outcome cost_neutrality() {
    Outcome o;
    const ReturnPanel& p = synthetic_sample().sample;
    double worst = 0.0;
    for (Penalty pen : {Penalty::L1, Penalty::L2}) {
        for (double lambda : {1e-4, 1e-2}) {
            RegularizationSpec plain = penalty(pen, lambda);
            RegularizationSpec costed = plain;
            costed.costs = VectorXd::Ones(p.instruments());
            worst = std::max(worst, max_abs_diff(fit(p, plain).beta, fit_with_costs(p, costed).beta));
        }
    }
    o.note(fmt::format("psi=1 max|diff| {:.1e}", worst));
    o.require(worst < 1e-10, "unit costs");

    ReturnPanel dup = p;
    dup.x.resize(p.rows(), 2);
    dup.x.col(0) = p.x.col(0);
    dup.x.col(1) = p.x.col(0);
    dup.instrument_names = {"CHEAP", "DEAR"};
    RegularizationSpec l1 = penalty(Penalty::L1, 1e-4);
    l1.costs = Eigen::Vector2d(1.0, 10.0);
    const VectorXd beta = fit_with_costs(dup, l1).beta;
    o.note(fmt::format("psi=[1,10] beta [{:.6f}, {}]", beta(0), beta(1)));
    o.require(beta(1) == 0.0, "expensive duplicate not exactly zero");
    o.require(beta(0) != 0.0, "cheap duplicate zero");
    return o;
}

Outcome rotation_invariance() {
    Outcome o;
    const ReturnPanel& p = synthetic_sample().sample;
    const VectorXd plain = factor_hedge(p, FactorMethod::FaUnrotated).beta;
    const VectorXd rotated = factor_hedge(p, FactorMethod::FaVarimax).beta;
    const double d = max_abs_diff(plain, rotated);
    o.note(fmt::format("max|diff| {:.1e}", d));
    o.require(d < 1e-6, "varimax vs unrotated");
    return o;
}

Outcome factor_neutrality() {
    Outcome o;
    const ReturnPanel& p = synthetic_sample().sample;
    for (FactorMethod m : {FactorMethod::Pca, FactorMethod::FaUnrotated, FactorMethod::FaVarimax}) {
        const FactorHedge h = factor_hedge(p, m);
        const VectorXd r = p.y - p.x * h.beta;
        const VectorXd rc = r.array() - r.mean();
        const MatrixXd sc = h.decomposition.scores.rowwise() - h.decomposition.scores.colwise().mean();
        const double worst =
            (sc.transpose() * rc).cwiseAbs().maxCoeff() / static_cast<double>(p.rows() - 1);
        o.note(fmt::format("{} {:.1e}", to_string(m), worst));
        o.require(worst < 1e-8, std::string(to_string(m)));
    }
    return o;
}

Outcome multicollinearity() {
    Outcome o;
    SynthConfig sc;
    sc.duplicate_correlation = 0.9995;
    const ReturnPanel history = to_returns(synth_prices(sc), "TARGET");
    SamplePlan plan;
    plan.seed = 42;
    const ReturnPanel p = demeaned(draw_sample(history, plan));
    const VectorXd a = p.x.col(3), b = p.x.col(4);
    const double corr = (a.array() - a.mean()).matrix().dot((b.array() - b.mean()).matrix()) /
                        std::sqrt((a.array() - a.mean()).square().sum() *
                                  (b.array() - b.mean()).square().sum());
    const VectorXd ols = fit_ols(p).beta;
    const VectorXd ridge = fit_ridge(p, penalty(Penalty::L2, 0.01)).beta;
    const double pair_gap =
        std::abs(ridge(3) - ridge(4)) / std::max(std::abs(ridge(3)), std::abs(ridge(4)));
    o.note(fmt::format("pair corr {:.5f}; |ridge| {:.4f} < |ols| {:.4f}; ridge pair {:.4f}/{:.4f}; "
                       "ols pair {:.4f}/{:.4f}",
                       corr, ridge.norm(), ols.norm(), ridge(3), ridge(4), ols(3), ols(4)));
    o.require(corr > 0.999, "pair correlation");
    o.require(ridge.norm() < ols.norm(), "ridge norm");
    o.require(pair_gap < 0.10, "ridge pair gap");
    return o;
}

Outcome sampler() {
    Outcome o;
    const auto w = decay_weights(3, 0.5);
    o.require(w[0] == 1.0 / 7.0 && w[1] == 2.0 / 7.0 && w[2] == 4.0 / 7.0, "decay_weights(3, 0.5)");

    ReturnPanel three;
    three.target_name = "Y";
    three.y = Eigen::Vector3d(0, 1, 2);
    three.x = three.y;
    three.instrument_names = {"X"};
    three.dates = {"a", "b", "c"};
    SamplePlan plan;
    plan.n_samples = 100000;
    plan.seed = 2024;
    plan.decay.alpha_decay = 0.5;
    const ReturnPanel s = draw_sample(three, plan);
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double f = static_cast<double>((s.y.array() == i).count()) / 100000.0;
        worst = std::max(worst, std::abs(f - w[static_cast<std::size_t>(i)]));
    }
    o.note(fmt::format("max freq err {:.4f}", worst));
    o.require(worst < 0.01, "draw frequencies");

    // Same draws per seed; the shifted series scales the second half by sqrt(2).
    const auto grid = default_decay_grid();
    int wins = 0;
    std::string pairs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const ReturnPanel iid = test::random_panel(1000, VectorXd::Zero(3), 1.0, seed);
        ReturnPanel shift = iid;
        shift.x.bottomRows(500) *= std::sqrt(2.0);
        shift.y.tail(500) *= std::sqrt(2.0);
        const double a_iid = calibrate_decay(iid, 250, grid).alpha_decay;
        const double a_shift = calibrate_decay(shift, 250, grid).alpha_decay;
        if (a_iid > a_shift) ++wins;
        pairs += fmt::format(" {:.4f}/{:.4f}", a_iid, a_shift);
    }
    o.note(fmt::format("iid>shift {}/10 (alpha iid/shift:{})", wins, pairs));
    o.require(wins == 10, "regime ordering");
    return o;
}

Outcome vae_numerics() {
    Outcome o;
    Rng rng(99);
    VaeParameters params = init_parameters(2, {16, 8}, 3);
    MatrixXd in(5, 2), out(5, 3), noise(5, 2);
    for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
    out.leftCols(2) = in;
    out.col(2) = 0.6 * in.col(0) + 0.4 * in.col(1);
    VaeParameters grad;
    loss_and_gradient(params, in, out, noise, 0.5, &grad);
    const VectorXd analytic = flatten(grad);
    const VectorXd theta = flatten(params);
    double worst = 0.0;
    VaeParameters probe = params;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        VectorXd up = theta, down = theta;
        up(i) += 1e-5;
        down(i) -= 1e-5;
        assign(probe, up);
        const double fu = loss_and_gradient(probe, in, out, noise, 0.5, nullptr).total;
        assign(probe, down);
        const double fd = loss_and_gradient(probe, in, out, noise, 0.5, nullptr).total;
        const double numeric = (fu - fd) / 2e-5;
        const double scale = std::max({std::abs(numeric), std::abs(analytic(i)), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic(i)) / scale);
    }
    o.note(fmt::format("grad rel err {:.1e} over {} params", worst, theta.size()));
    o.require(worst < 1e-4, "gradient check");

    o.require(kl_std_normal(0.0, 1.0) == 0.0, "kl(0,1)");
    o.require(kl_std_normal(1.0, 1.0) == 0.5, "kl(1,1)");

    MatrixXd z1(3, 2), z2(3, 2);
    for (Eigen::Index i = 0; i < z1.size(); ++i) {
        z1.data()[i] = rng.normal();
        z2.data()[i] = rng.normal();
    }
    const double sup =
        (decode(params, z1 + z2) - decode(params, z1) - decode(params, z2)).cwiseAbs().maxCoeff();
    o.note(fmt::format("superposition {:.1e}", sup));
    o.require(sup < 1e-12, "decoder superposition");

    const ReturnPanel panel = test::random_panel(1000, Eigen::Vector2d(0.6, 0.4), 0.01, 11, 0.02);
    const auto t0 = std::chrono::steady_clock::now();
    const VectorXd beta = extract_hedge_vae(train(panel, VaeConfig{}));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.note(fmt::format("recovered [{:.4f}, {:.4f}] in {:.1f}s", beta(0), beta(1), secs));
    o.require(std::abs(beta(0) - 0.6) < 0.1 && std::abs(beta(1) - 0.4) < 0.1, "beta recovery");
    o.require(secs <= 300.0, "training time");
    return o;
}

Outcome eval_checks() {
    Outcome o;
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 1.0);
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);
        }
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const double h = 999.0 * 0.01;
        const auto lo = static_cast<std::size_t>(h);
        const double oracle = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
        o.require(var_99(v, 0.0) == oracle, "var_99 permutation " + std::to_string(rep));
    }
    o.note(fmt::format("var_99(1..1000) = {:.4f}", var_99(v, 0.0)));

    const ReturnPanel& p = synthetic_sample().sample;
    o.require(r_squared(p.y, p.y) == 1.0, "r_squared(y, y)");
    const VectorXd beta = fit_ols(p).beta;
    const EvaluationReport r = evaluate(p, beta, synthetic_sample().costs);
    const double gap =
        std::abs(r.shifted_residuals.mean() - (r.hedge_cost_total + r.residuals.mean()));
    o.note(fmt::format("pnl decomposition gap {:.1e}", gap));
    o.require(gap < 1e-12, "cost + market decomposition");
    return o;
}

Outcome end_to_end() {
    Outcome o;
    const fs::path dir = test::scratch_dir("acceptance_e2e");
    const std::string cli = test::cli();
    if (test::run_command(cli + " synth --output-dir " + dir.string() + " > /dev/null") != 0) {
        o.require(false, "synth");
        return o;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const int code = test::run_command(cli + " compare --prices " + (dir / "prices.csv").string() +
                                       " --costs " + (dir / "costs.csv").string() +
                                       " --target TARGET --output-dir " + (dir / "run").string() +
                                       " > /dev/null");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(code == 0, fmt::format("compare exit {}", code));

    std::istringstream report(test::read_file(dir / "run" / "report.csv"));
    std::string header, line;
    std::getline(report, header);
    o.require(header == "name,ols,lasso,lasso-cost,ridge,ridge-cost,pca,fa,fa-varimax,vae", "header");
    std::vector<std::string> rows;
    while (std::getline(report, line)) rows.push_back(line);
    o.require(rows.size() == 11 && rows.back().rfind("R2,", 0) == 0, "ten instruments plus R2 row");
    std::size_t columns = std::count(header.begin(), header.end(), ',');
    o.require(columns == 9, "nine method columns");

    std::map<std::string, double> r2;
    std::ifstream diag(dir / "run" / "diagnostics.jsonl");
    while (std::getline(diag, line)) {
        const auto j = nlohmann::json::parse(line);
        if (j["status"] == "ok") r2[j["method"].get<std::string>()] = j["r_squared"].get<double>();
    }
    o.require(r2.size() == 9, "all nine methods ok");
    double lowest = 1.0;
    for (const auto& [m, v] : r2) lowest = std::min(lowest, v);
    o.require(lowest >= 0.9, "R2 >= 0.9");
    for (const char* m : {"lasso", "lasso-cost", "ridge", "ridge-cost"}) {
        o.require(r2.count(m) && r2["ols"] >= r2[m], std::string("ols R2 >= ") + m);
    }

    const int replay = test::run_command(cli + " compare --config " +
                                         (dir / "run" / "manifest.txt").string() +
                                         " --output-dir " + (dir / "replay").string() + " > /dev/null");
    o.require(replay == 0, "replay exit");
    o.require(test::read_file(dir / "run" / "report.csv") ==
                  test::read_file(dir / "replay" / "report.csv"),
              "replayed report differs");
    o.note(fmt::format("min R2 {:.4f}, ols R2 {:.6f}, compare {:.1f}s", lowest, r2["ols"], secs));
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"equivalence ladder", equivalence_ladder},
        {"cost neutrality", cost_neutrality},
        {"rotation invariance", rotation_invariance},
        {"factor neutrality", factor_neutrality},
        {"multicollinearity regime", multicollinearity},
        {"sampler", sampler},
        {"vae numerics", vae_numerics},
        {"eval", eval_checks},
        {"end to end", end_to_end},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::cout << fmt::format("{} {} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1,
                                 criteria[i].first, o.detail)
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures,
                             criteria.size());
    return failures == 0 ? 0 : 1;
}
