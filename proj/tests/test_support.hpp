#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hedgekit/marketdata.hpp"
#include "hedgekit/rng.hpp"

namespace hedgekit::test {

/// k x n panel of independent normals; y = x * beta + noise_sd * N(0,1).
inline ReturnPanel random_panel(Eigen::Index k, const VectorXd& beta, double noise_sd,
                                std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    ReturnPanel p;
    p.target_name = "Y";
    p.x.resize(k, beta.size());
    p.y.resize(k);
    for (Eigen::Index t = 0; t < k; ++t) {
        for (Eigen::Index j = 0; j < beta.size(); ++j) p.x(t, j) = scale * rng.normal();
        p.y(t) = p.x.row(t).dot(beta) + noise_sd * rng.normal();
        p.dates.push_back(std::to_string(t));
    }
    for (Eigen::Index j = 0; j < beta.size(); ++j) p.instrument_names.push_back("X" + std::to_string(j));
    return p;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Exit status of a shell command.
inline int run_command(const std::string& command) {
    const int raw = std::system(command.c_str());
    if (raw == -1) return -1;
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

inline std::string cli() { return HEDGEKIT_CLI_PATH; }

}  // namespace hedgekit::test
