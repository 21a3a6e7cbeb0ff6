#pragma once

#include "srf/generror.hpp"
#include "srf/model.hpp"
#include "srf/simulate.hpp"
#include "srf/spectrum.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace srf {

inline constexpr const char* kArtifactVersion = "1.0.0";

nlohmann::json tau_to_json(const TauSet& t);
nlohmann::json run_to_json(const RunResult& r, bool include_eigenvalues = true);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
// One eigenvalue per line, preceded by a comment line with the config hash.
void write_eigenvalues_csv(const std::filesystem::path& path, const Eigen::VectorXd& eigs, const std::string& hash);
// Columns lambda,density,eps_used,converged after a JSON metadata comment line.
void write_density_csv(const std::filesystem::path& path, const DensityCurve& c, const nlohmann::json& meta);

struct SweepRow {
    double alpha = 0.0;
    double theory = 0.0;
    double sim_mean = std::nan("");
    double sim_stderr = std::nan("");
    TauSet tau;
};
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows, const nlohmann::json& meta);

// Histogram of values on [lo, hi] normalized as a density.
struct Histogram {
    std::vector<double> edges;
    std::vector<double> density;
};
Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins);
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h, const nlohmann::json& meta);

struct RunManifest {
    std::string config_hash;
    std::string command;
    std::string version = kArtifactVersion;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const;
};

std::string utc_timestamp();

} // namespace srf
