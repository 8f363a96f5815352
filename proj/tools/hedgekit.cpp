// hedgekit command-line front end.
//
//   hedgekit synth           write a synthetic price panel and cost table
//   hedgekit calibrate-decay fit the sampling decay factor, print JSON
//   hedgekit compute         one method, report to stdout
//   hedgekit compare         several methods, report files in --output-dir
//
// Exit status: 0 ok, 2 configuration error, 3 data error, 4 solver error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "hedgekit/betavae.hpp"
#include "hedgekit/error.hpp"
#include "hedgekit/pipeline.hpp"
#include "hedgekit/sampler.hpp"
#include "hedgekit/synth.hpp"

namespace {

using namespace hedgekit;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

/// Flag values; applied on top of a --config file only when given.
struct RunFlags {
    std::string config_path;
    std::string prices, costs, target, methods, decay, output_dir, cv, vae_hidden;
    double lambda = 0.0, vae_beta = 0.0;
    int window = 0, vae_epochs = 0, vae_restarts = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    bool standardize = false;
};

void add_run_options(CLI::App* cmd, RunFlags& f, bool single_method) {
    cmd->add_option("--config", f.config_path, "key = value config file; flags override it");
    cmd->add_option("--prices", f.prices, "price CSV (date,<id>,...)");
    cmd->add_option("--target", f.target, "column to hedge");
    cmd->add_option("--costs", f.costs, "unit cost CSV (variable,cost)");
    if (single_method) {
        cmd->add_option("--method", f.methods, "ols|lasso|lasso-cost|ridge|ridge-cost|pca|fa|fa-varimax|vae");
    } else {
        cmd->add_option("--methods", f.methods, "comma-separated methods (default: all nine)");
    }
    cmd->add_option("--lambda", f.lambda, "regularization strength");
    cmd->add_option("--window", f.window, "decay calibration window (days)");
    cmd->add_option("--samples", f.samples, "rows drawn from history");
    cmd->add_option("--seed", f.seed, "seed for sampling and VAE training");
    cmd->add_option("--decay", f.decay, "auto or a fixed decay factor in (0, 1]");
    cmd->add_option("--output-dir", f.output_dir, "where report files go");
    cmd->add_flag("--standardize", f.standardize, "fit on unit-variance columns (not with costs)");
    cmd->add_option("--cv", f.cv, "cross-validate lambda: <folds>:<l1>,<l2>,...");
    cmd->add_option("--vae-hidden", f.vae_hidden, "encoder widths, e.g. 16,8");
    cmd->add_option("--vae-beta", f.vae_beta, "KL weight");
    cmd->add_option("--vae-epochs", f.vae_epochs, "training epochs");
    cmd->add_option("--vae-restarts", f.vae_restarts, "independent seeds to train");
}

RunConfig resolve(const CLI::App* cmd, const RunFlags& f) {
    RunConfig config;
    if (!f.config_path.empty()) config = load_config(f.config_path);
    std::ostringstream overrides;
    auto given = [&](const char* name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--prices")) overrides << "prices = " << f.prices << "\n";
    if (given("--target")) overrides << "target = " << f.target << "\n";
    if (given("--costs")) overrides << "costs = " << f.costs << "\n";
    if (given("--method") || given("--methods")) overrides << "methods = " << f.methods << "\n";
    if (given("--lambda")) overrides << fmt::format("lambda = {:.17g}\n", f.lambda);
    if (given("--window")) overrides << "window = " << f.window << "\n";
    if (given("--samples")) overrides << "samples = " << f.samples << "\n";
    if (given("--seed")) overrides << "seed = " << f.seed << "\n";
    if (given("--decay")) overrides << "decay = " << f.decay << "\n";
    if (given("--output-dir")) overrides << "output_dir = " << f.output_dir << "\n";
    if (given("--standardize")) overrides << "standardize = true\n";
    if (given("--cv")) overrides << "cv = " << f.cv << "\n";
    if (given("--vae-hidden")) overrides << "vae_hidden = " << f.vae_hidden << "\n";
    if (given("--vae-beta")) overrides << fmt::format("vae_beta = {:.17g}\n", f.vae_beta);
    if (given("--vae-epochs")) overrides << "vae_epochs = " << f.vae_epochs << "\n";
    if (given("--vae-restarts")) overrides << "vae_restarts = " << f.vae_restarts << "\n";
    std::istringstream in(overrides.str());
    return parse_config(in, config);
}

int exit_code_for(const HedgeError& e) {
    switch (e.category()) {
        case ErrorCategory::Data: return kExitData;
        case ErrorCategory::Config: return kExitConfig;
        case ErrorCategory::Solver: return kExitSolver;
    }
    return kExitSolver;
}

int run_synth(const std::string& dir, const SynthConfig& config) {
    std::filesystem::create_directories(dir);
    std::ofstream prices(std::filesystem::path(dir) / "prices.csv", std::ios::binary);
    write_price_csv(prices, synth_prices(config));
    std::ofstream costs(std::filesystem::path(dir) / "costs.csv", std::ios::binary);
    write_cost_csv(costs, synth_costs(config));
    std::cout << fmt::format("wrote {}/prices.csv ({} rows, target {}) and {}/costs.csv\n", dir,
                             config.days, config.target_name, dir);
    return 0;
}

int run_calibrate(const RunConfig& config) {
    if (config.prices_path.empty() || config.target.empty()) {
        throw ConfigError("calibrate-decay needs --prices and --target");
    }
    const ReturnPanel panel = to_returns(load_price_csv(config.prices_path), config.target);
    const DecayModel model = calibrate_decay(panel, config.window, default_decay_grid());
    nlohmann::json out;
    out["alpha_decay"] = model.alpha_decay;
    out["window"] = model.window;
    out["component_alphas"] = model.component_alphas;
    out["component_weights"] = model.component_weights;
    out["pit_ks"] = model.pit_stat;
    out["pit_pvalue"] = model.pit_pvalue;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_compute(RunConfig config, const std::string& dump_model) {
    if (config.methods.size() != 1) throw ConfigError("compute takes exactly one --method");
    validate(config);
    const PreparedData data = prepare_data(config);
    const MethodOutcome outcome = run_method(config.methods.front(), data, config);
    std::cout << format_report(data.sample.instrument_names, {outcome});
    if (!outcome.ok) {
        std::cerr << "error: " << outcome.error << "\n";
        return kExitSolver;
    }
    std::cout << fmt::format("# decay = {:.6f}, var_99 = {:.6g}, hedge_cost = {:.6g}\n",
                             data.decay.alpha_decay, outcome.report.var_99,
                             outcome.report.hedge_cost_total);
    if (!dump_model.empty()) {
        if (config.methods.front() != "vae") throw ConfigError("--dump-model applies to vae only");
        const VaeModel model = train(data.sample, vae_settings(config));
        std::ofstream out(dump_model);
        write_model(out, model);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hedgekit: hedge ratios and risk compression from return histories"};
    app.require_subcommand(1);

    SynthConfig synth;
    std::string synth_dir = ".";
    auto* synth_cmd = app.add_subcommand("synth", "write synthetic prices.csv and costs.csv");
    synth_cmd->add_option("--output-dir", synth_dir, "destination directory");
    synth_cmd->add_option("--days", synth.days, "price rows");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--dup-corr", synth.duplicate_correlation, "H04/H05 return correlation");
    synth_cmd->add_option("--target-name", synth.target_name, "target column name");

    RunFlags compare_flags, compute_flags, calib_flags;
    auto* compare_cmd = app.add_subcommand("compare", "run several methods and write a report");
    add_run_options(compare_cmd, compare_flags, false);
    auto* compute_cmd = app.add_subcommand("compute", "run one method and print its hedge ratios");
    add_run_options(compute_cmd, compute_flags, true);
    std::string dump_model;
    compute_cmd->add_option("--dump-model", dump_model, "write the trained VAE (vae only)");
    auto* calib_cmd = app.add_subcommand("calibrate-decay", "calibrate the sampling decay factor");
    calib_cmd->add_option("--config", calib_flags.config_path, "config file");
    calib_cmd->add_option("--prices", calib_flags.prices, "price CSV");
    calib_cmd->add_option("--target", calib_flags.target, "target column");
    calib_cmd->add_option("--window", calib_flags.window, "rolling PIT window");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth_dir, synth);
        if (calib_cmd->parsed()) return run_calibrate(resolve(calib_cmd, calib_flags));
        if (compute_cmd->parsed()) return run_compute(resolve(compute_cmd, compute_flags), dump_model);
        if (compare_cmd->parsed()) {
            const RunConfig config = resolve(compare_cmd, compare_flags);
            const CompareResult result = run_compare(config);
            std::cout << fmt::format("decay {:.6f}; report written to {}\n", result.decay.alpha_decay,
                                     (config.output_dir / "report.csv").string());
            for (const auto& o : result.outcomes) {
                if (!o.ok) std::cerr << fmt::format("method {} failed: {}\n", o.method, o.error);
            }
            return result.exit_code;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const HedgeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
