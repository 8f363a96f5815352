#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "hedgekit/betavae.hpp"
#include "hedgekit/eval.hpp"
#include "hedgekit/marketdata.hpp"
#include "hedgekit/sampler.hpp"

namespace hedgekit {

/// Method keys in canonical (report) order.
const std::vector<std::string>& all_methods();
bool is_known_method(const std::string& method);

struct CvSpec {
    int folds = 5;
    std::vector<double> ladder;
};

/// Parses "<folds>:<lambda>,<lambda>,..." e.g. "5:1e-5,1e-4,1e-3".
CvSpec parse_cv_spec(const std::string& text);
std::string format_cv_spec(const CvSpec& cv);

struct RunConfig {
    std::filesystem::path prices_path;
    std::optional<std::filesystem::path> costs_path;
    std::string target;
    std::vector<std::string> methods = all_methods();
    double lambda = 1e-4;
    int window = 100;
    std::size_t samples = 1000;
    std::uint64_t seed = 42;
    std::optional<double> decay;  ///< empty = calibrate
    std::filesystem::path output_dir = "hedgekit-out";
    bool standardize = false;
    std::optional<CvSpec> cv;
    VaeConfig vae;
    int vae_restarts = 1;
};

/// Raised for invalid or inconsistent configuration (exit status 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// `key = value` lines; '#' starts a comment. Keys are listed in README.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
/// Inverse of parse_config; what a manifest stores.
std::string to_config_text(const RunConfig& config);

void validate(const RunConfig& config);

/// VAE settings of a run; training always uses the run seed.
VaeConfig vae_settings(const RunConfig& config);

struct MethodOutcome {
    std::string method;
    bool ok = false;
    std::string error;
    EvaluationReport report;
    int iterations = 0;
    bool converged = true;
    double lambda = 0.0;
    std::string details_json = "{}";  ///< method-specific diagnostics
};

struct CompareResult {
    DecayModel decay;
    ReturnPanel sample;  ///< demeaned resampled panel every method saw
    std::vector<MethodOutcome> outcomes;
    int exit_code = 0;
};

/// Everything before the methods: load, return, calibrate if needed, draw,
/// demean.
struct PreparedData {
    ReturnPanel history;
    ReturnPanel sample;
    DecayModel decay;
    std::optional<VectorXd> costs;  ///< raw unit costs aligned to instruments
};

PreparedData prepare_data(const RunConfig& config);

/// Runs one method on the prepared sample.
MethodOutcome run_method(const std::string& method, const PreparedData& data,
                         const RunConfig& config);

/// Full comparison; writes report.csv, diagnostics.jsonl, residuals.csv and
/// manifest.txt into config.output_dir. exit_code is 0, or 4 when at least
/// one method failed (its column reads NA).
CompareResult run_compare(const RunConfig& config);

/// Table-layout CSV: `name,<methods...>`, one row per instrument sorted by
/// name, then an `R2` row.
std::string format_report(const std::vector<std::string>& instruments,
                          const std::vector<MethodOutcome>& outcomes);

}  // namespace hedgekit
