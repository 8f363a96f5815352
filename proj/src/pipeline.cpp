#include "hedgekit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hedgekit/error.hpp"
#include "hedgekit/factors.hpp"
#include "hedgekit/regularized.hpp"

namespace hedgekit {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, value));
    }
    return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
    Int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(fmt::format("{}: '{}' is not an integer", key, value));
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, value));
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? "," : "") + fmt::format("{:.17g}", values[i]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
    return out;
}

bool is_costed(const std::string& method) { return method == "lasso-cost" || method == "ridge-cost"; }

json summary_json(const ResidualSummary& s) {
    return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

std::optional<VectorXd> relative_costs(const std::optional<VectorXd>& raw) {
    if (!raw) return std::nullopt;
    return VectorXd(*raw / raw->mean());
}

RegularizationSpec regularization_for(const std::string& method, const PreparedData& data,
                                      const RunConfig& config) {
    RegularizationSpec spec;
    spec.lambda = config.lambda;
    if (method == "ols") {
        spec.penalty = Penalty::None;
    } else if (method == "lasso" || method == "lasso-cost") {
        spec.penalty = Penalty::L1;
    } else {
        spec.penalty = Penalty::L2;
    }
    if (is_costed(method)) {
        spec.costs = relative_costs(data.costs);
    } else {
        spec.standardize = config.standardize;
    }
    return spec;
}

}  // namespace

const std::vector<std::string>& all_methods() {
    static const std::vector<std::string> methods{"ols",        "lasso", "lasso-cost",
                                                  "ridge",      "ridge-cost", "pca",
                                                  "fa",         "fa-varimax", "vae"};
    return methods;
}

bool is_known_method(const std::string& method) {
    const auto& all = all_methods();
    return std::find(all.begin(), all.end(), method) != all.end();
}

CvSpec parse_cv_spec(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError(fmt::format("cv spec '{}' must look like <folds>:<l1>,<l2>,...", text));
    }
    CvSpec cv;
    cv.folds = parse_int<int>("cv folds", trim(text.substr(0, colon)));
    for (const auto& item : split(text.substr(colon + 1), ',')) {
        cv.ladder.push_back(parse_double("cv lambda", item));
    }
    if (cv.folds < 2 || cv.ladder.empty()) {
        throw ConfigError("cv needs at least 2 folds and one lambda");
    }
    return cv;
}

std::string format_cv_spec(const CvSpec& cv) {
    return fmt::format("{}:{}", cv.folds, join_doubles(cv.ladder));
}

RunConfig parse_config(std::istream& in, RunConfig config) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "prices") {
            config.prices_path = value;
        } else if (key == "costs") {
            if (value.empty()) {
                config.costs_path.reset();
            } else {
                config.costs_path = value;
            }
        } else if (key == "target") {
            config.target = value;
        } else if (key == "methods") {
            config.methods = split(value, ',');
        } else if (key == "lambda") {
            config.lambda = parse_double(key, value);
        } else if (key == "window") {
            config.window = parse_int<int>(key, value);
        } else if (key == "samples") {
            config.samples = parse_int<std::size_t>(key, value);
        } else if (key == "seed") {
            config.seed = parse_int<std::uint64_t>(key, value);
        } else if (key == "decay") {
            if (value == "auto") {
                config.decay.reset();
            } else {
                config.decay = parse_double(key, value);
            }
        } else if (key == "output_dir") {
            config.output_dir = value;
        } else if (key == "standardize") {
            config.standardize = parse_bool(key, value);
        } else if (key == "cv") {
            if (value.empty() || value == "none") {
                config.cv.reset();
            } else {
                config.cv = parse_cv_spec(value);
            }
        } else if (key == "vae_hidden") {
            config.vae.hidden_layers.clear();
            for (const auto& w : split(value, ',')) config.vae.hidden_layers.push_back(parse_int<int>(key, w));
        } else if (key == "vae_beta") {
            config.vae.beta_hat = parse_double(key, value);
        } else if (key == "vae_epochs") {
            config.vae.epochs = parse_int<int>(key, value);
        } else if (key == "vae_batch") {
            config.vae.batch_size = parse_int<int>(key, value);
        } else if (key == "vae_learning_rate") {
            config.vae.learning_rate = parse_double(key, value);
        } else if (key == "vae_anneal") {
            config.vae.kl_anneal_epochs = parse_int<int>(key, value);
        } else if (key == "vae_restarts") {
            config.vae_restarts = parse_int<int>(key, value);
        } else {
            throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
        }
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    return parse_config(in, std::move(base));
}

std::string to_config_text(const RunConfig& config) {
    std::string out;
    auto put = [&](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };
    put("prices", config.prices_path.string());
    put("costs", config.costs_path ? config.costs_path->string() : "");
    put("target", config.target);
    std::string methods;
    for (std::size_t i = 0; i < config.methods.size(); ++i) methods += (i ? "," : "") + config.methods[i];
    put("methods", methods);
    put("lambda", fmt::format("{:.17g}", config.lambda));
    put("window", std::to_string(config.window));
    put("samples", std::to_string(config.samples));
    put("seed", std::to_string(config.seed));
    put("decay", config.decay ? fmt::format("{:.17g}", *config.decay) : "auto");
    put("output_dir", config.output_dir.string());
    put("standardize", config.standardize ? "true" : "false");
    put("cv", config.cv ? format_cv_spec(*config.cv) : "none");
    put("vae_hidden", join_ints(config.vae.hidden_layers));
    put("vae_beta", fmt::format("{:.17g}", config.vae.beta_hat));
    put("vae_epochs", std::to_string(config.vae.epochs));
    put("vae_batch", std::to_string(config.vae.batch_size));
    put("vae_learning_rate", fmt::format("{:.17g}", config.vae.learning_rate));
    put("vae_anneal", std::to_string(config.vae.kl_anneal_epochs));
    put("vae_restarts", std::to_string(config.vae_restarts));
    return out;
}

VaeConfig vae_settings(const RunConfig& config) {
    VaeConfig vae = config.vae;
    vae.seed = config.seed;
    return vae;
}

void validate(const RunConfig& config) {
    if (config.prices_path.empty()) throw ConfigError("no price file given (--prices)");
    if (config.target.empty()) throw ConfigError("no target given (--target)");
    if (config.methods.empty()) throw ConfigError("no methods selected");
    bool costed = false;
    for (const auto& m : config.methods) {
        if (!is_known_method(m)) throw ConfigError(fmt::format("unknown method '{}'", m));
        costed = costed || is_costed(m);
    }
    if (costed && !config.costs_path) {
        throw ConfigError(
            "methods lasso-cost/ridge-cost need a cost file: pass --costs <variable,cost csv>");
    }
    if (costed && config.standardize) {
        throw ConfigError("--standardize cannot be combined with cost-adjusted methods");
    }
    if (!(config.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (config.window < 2) throw ConfigError("window must be >= 2");
    if (config.samples < 1) throw ConfigError("samples must be >= 1");
    if (config.decay && !(*config.decay > 0.0 && *config.decay <= 1.0)) {
        throw ConfigError("decay must be in (0, 1] or 'auto'");
    }
    if (config.vae_restarts < 1) throw ConfigError("vae restarts must be >= 1");
    if (config.vae.epochs < 1 || config.vae.batch_size < 1) {
        throw ConfigError("vae epochs and batch size must be >= 1");
    }
}

PreparedData prepare_data(const RunConfig& config) {
    PreparedData data;
    data.history = to_returns(load_price_csv(config.prices_path), config.target);
    if (config.costs_path) {
        data.costs = load_cost_csv(*config.costs_path).aligned_to(data.history.instrument_names);
    }
    if (config.decay) {
        data.decay = DecayModel::unit();
        data.decay.alpha_decay = *config.decay;
    } else {
        data.decay = calibrate_decay(data.history, config.window, default_decay_grid());
    }
    SamplePlan plan;
    plan.n_samples = config.samples;
    plan.seed = config.seed;
    plan.decay = data.decay;
    data.sample = demeaned(draw_sample(data.history, plan));
    return data;
}

MethodOutcome run_method(const std::string& method, const PreparedData& data,
                         const RunConfig& config) {
    MethodOutcome out;
    out.method = method;
    const ReturnPanel& panel = data.sample;
    try {
        VectorXd beta;
        json details = json::object();
        if (method == "pca" || method == "fa" || method == "fa-varimax") {
            const FactorMethod fm = method == "pca"  ? FactorMethod::Pca
                                    : method == "fa" ? FactorMethod::FaUnrotated
                                                     : FactorMethod::FaVarimax;
            const FactorHedge hedge = factor_hedge(panel, fm);
            beta = hedge.beta;
            out.iterations = hedge.decomposition.iterations;
            details["gamma_condition"] = condition_number(hedge.decomposition.gamma);
            details["explained_variance"] = std::vector<double>(
                hedge.decomposition.explained_variance.data(),
                hedge.decomposition.explained_variance.data() + hedge.decomposition.explained_variance.size());
            if (fm != FactorMethod::Pca) {
                details["heywood"] = hedge.decomposition.heywood;
                details["floored_factors"] = hedge.decomposition.floored_factors;
                details["varimax_sweeps"] = hedge.decomposition.varimax_criterion.size();
            }
        } else if (method == "vae") {
            const auto models = train_restarts(panel, vae_settings(config), config.vae_restarts);
            std::vector<VectorXd> betas;
            for (const auto& m : models) betas.push_back(extract_hedge_vae(m));
            beta = betas.front();
            out.iterations = config.vae.epochs;
            const auto& last = models.front().history.back();
            details["final_reconstruction"] = last.reconstruction;
            details["final_kl"] = last.kl;
            json restarts = json::array();
            for (std::size_t r = 0; r < models.size(); ++r) {
                restarts.push_back({{"seed", models[r].seed},
                                    {"betas", std::vector<double>(betas[r].data(),
                                                                  betas[r].data() + betas[r].size())}});
            }
            details["restarts"] = restarts;
            if (betas.size() > 1) {
                std::vector<double> sd(static_cast<std::size_t>(beta.size()));
                for (Eigen::Index j = 0; j < beta.size(); ++j) {
                    double mean = 0.0;
                    for (const auto& b : betas) mean += b(j);
                    mean /= static_cast<double>(betas.size());
                    double ss = 0.0;
                    for (const auto& b : betas) ss += (b(j) - mean) * (b(j) - mean);
                    sd[static_cast<std::size_t>(j)] = std::sqrt(ss / static_cast<double>(betas.size() - 1));
                }
                details["beta_dispersion"] = sd;
            }
        } else {
            RegularizationSpec spec = regularization_for(method, data, config);
            if (config.cv && method != "ols") {
                const CvResult cv = cross_validate(panel, spec, config.cv->ladder, config.cv->folds,
                                                   data.decay.alpha_decay);
                spec.lambda = cv.best_lambda;
                details["cv_scores"] = cv.scores;
            }
            const FitResult fit = hedgekit::fit(panel, spec);
            beta = fit.beta;
            out.iterations = fit.iterations;
            out.converged = fit.converged;
            out.lambda = method == "ols" ? 0.0 : spec.lambda;
        }
        out.report = evaluate(panel, beta, data.costs);
        out.details_json = details.dump();
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

std::string format_report(const std::vector<std::string>& instruments,
                          const std::vector<MethodOutcome>& outcomes) {
    std::vector<std::size_t> order(instruments.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return instruments[a] < instruments[b]; });

    std::string out = "name";
    for (const auto& o : outcomes) out += "," + o.method;
    out += "\n";
    for (std::size_t idx : order) {
        out += instruments[idx];
        for (const auto& o : outcomes) {
            out += o.ok ? fmt::format(",{:.6f}", o.report.betas(static_cast<Eigen::Index>(idx)))
                        : std::string(",NA");
        }
        out += "\n";
    }
    out += "R2";
    for (const auto& o : outcomes) {
        out += o.ok ? fmt::format(",{:.6f}", o.report.r_squared) : std::string(",NA");
    }
    out += "\n";
    return out;
}

CompareResult run_compare(const RunConfig& config) {
    validate(config);
    const PreparedData data = prepare_data(config);

    CompareResult result;
    result.decay = data.decay;
    result.sample = data.sample;
    result.outcomes.resize(config.methods.size());
    const auto count = static_cast<std::ptrdiff_t>(config.methods.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        result.outcomes[idx] = run_method(config.methods[idx], data, config);
    }

    std::filesystem::create_directories(config.output_dir);
    {
        std::ofstream report(config.output_dir / "report.csv", std::ios::binary);
        report << format_report(data.sample.instrument_names, result.outcomes);
    }
    {
        std::ofstream diag(config.output_dir / "diagnostics.jsonl", std::ios::binary);
        for (const auto& o : result.outcomes) {
            json line;
            line["method"] = o.method;
            line["status"] = o.ok ? "ok" : "failed";
            if (!o.ok) {
                line["error"] = o.error;
            } else {
                line["r_squared"] = o.report.r_squared;
                line["var_99"] = o.report.var_99;
                line["hedge_cost_total"] = o.report.hedge_cost_total;
                line["residual_summary"] = summary_json(o.report.residual_summary);
                line["iterations"] = o.iterations;
                line["converged"] = o.converged;
                line["lambda"] = o.lambda;
                json betas = json::object();
                for (std::size_t j = 0; j < data.sample.instrument_names.size(); ++j) {
                    betas[data.sample.instrument_names[j]] =
                        o.report.betas(static_cast<Eigen::Index>(j));
                }
                line["betas"] = betas;
                line["details"] = json::parse(o.details_json);
            }
            diag << line.dump() << "\n";
        }
    }
    {
        std::ofstream resid(config.output_dir / "residuals.csv", std::ios::binary);
        std::vector<const MethodOutcome*> ok;
        for (const auto& o : result.outcomes) {
            if (o.ok) ok.push_back(&o);
        }
        resid << "row";
        for (const auto* o : ok) resid << "," << o->method;
        resid << "\n";
        for (Eigen::Index r = 0; r < data.sample.rows(); ++r) {
            resid << r;
            for (const auto* o : ok) resid << fmt::format(",{:.10g}", o->report.shifted_residuals(r));
            resid << "\n";
        }
    }
    {
        RunConfig manifest = config;
        manifest.prices_path = std::filesystem::absolute(config.prices_path);
        if (config.costs_path) manifest.costs_path = std::filesystem::absolute(*config.costs_path);
        std::ofstream out(config.output_dir / "manifest.txt", std::ios::binary);
        out << "# hedgekit run manifest; replay with: hedgekit compare --config <this file>\n";
        out << to_config_text(manifest);
        out << fmt::format("# calibrated_decay = {:.17g}\n", data.decay.alpha_decay);
        out << fmt::format("# decay_pit_ks = {:.17g}\n", data.decay.pit_stat);
        out << fmt::format("# decay_pit_pvalue = {:.17g}\n", data.decay.pit_pvalue);
        for (const auto& o : result.outcomes) {
            out << fmt::format("# method {}: status={} iterations={} converged={}\n", o.method,
                               o.ok ? "ok" : "failed", o.iterations, o.converged);
        }
    }

    result.exit_code = 0;
    for (const auto& o : result.outcomes) {
        if (!o.ok) result.exit_code = 4;
    }
    return result;
}

}  // namespace hedgekit
