#include "srf/artifacts.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace srf {

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

std::string num(double x)
{
    if (!std::isfinite(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

nlohmann::json tau_to_json(const TauSet& t)
{
    return {{"tau0", to_std(t.tau0)},
            {"tau1", to_std(t.tau1)},
            {"tau2", t.tau2},
            {"tau3", t.tau3},
            {"provenance", t.provenance == TauSet::Provenance::empirical ? "empirical" : "asymptotic"}};
}

nlohmann::json run_to_json(const RunResult& r, bool include_eigenvalues)
{
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["config_hash"] = config_hash(r.config);
    j["eigenvalues"] = include_eigenvalues ? nlohmann::json(to_std(r.eigenvalues)) : nlohmann::json::array();
    j["tau"] = tau_to_json(r.tau);
    j["gen_error"] = {{"mean", r.gen_error.mean}, {"stderr", r.gen_error.stderr_}, {"samples", r.gen_error.samples}};
    j["spike_deviation"] = r.spike_deviation;
    return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_eigenvalues_csv(const std::filesystem::path& path, const Eigen::VectorXd& eigs, const std::string& hash)
{
    auto out = open_out(path);
    out << "# " << nlohmann::json{{"config_hash", hash}}.dump() << '\n';
    for (Eigen::Index i = 0; i < eigs.size(); ++i) out << num(eigs[i]) << '\n';
}

void write_density_csv(const std::filesystem::path& path, const DensityCurve& c, const nlohmann::json& meta)
{
    auto out = open_out(path);
    out << "# " << meta.dump() << '\n';
    out << "lambda,density,eps_used,converged\n";
    for (size_t i = 0; i < c.grid.size(); ++i)
        out << num(c.grid[i]) << ',' << num(c.density[i]) << ',' << num(c.eps_used[i]) << ',' << (c.converged[i] ? 1 : 0)
            << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows, const nlohmann::json& meta)
{
    auto out = open_out(path);
    out << "# " << meta.dump() << '\n';
    const long k = rows.empty() ? 0 : rows.front().tau.tau0.size();
    out << "alpha,gen_error_theory,gen_error_sim_mean,gen_error_sim_stderr";
    for (long q = 0; q < k; ++q) out << ",tau0_" << q + 1;
    for (long q = 0; q < k; ++q) out << ",tau1_" << q + 1;
    out << ",tau2,tau3\n";
    for (const auto& r : rows) {
        out << num(r.alpha) << ',' << num(r.theory) << ',' << num(r.sim_mean) << ',' << num(r.sim_stderr);
        for (long q = 0; q < k; ++q) out << ',' << num(r.tau.tau0[q]);
        for (long q = 0; q < k; ++q) out << ',' << num(r.tau.tau1[q]);
        out << ',' << num(r.tau.tau2) << ',' << num(r.tau.tau3) << '\n';
    }
}

Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins)
{
    if (!(hi > lo) || bins < 1) throw std::invalid_argument("histogram: bad range");
    Histogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * double(i) / double(bins);
    h.density.assign(bins, 0.0);
    if (values.empty()) return h;
    const double w = (hi - lo) / double(bins);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        const int b = std::min(bins - 1, static_cast<int>((v - lo) / w));
        h.density[b] += 1.0;
    }
    for (double& d : h.density) d /= double(values.size()) * w;
    return h;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h, const nlohmann::json& meta)
{
    auto out = open_out(path);
    out << "# " << meta.dump() << '\n';
    out << "left,right,density\n";
    for (size_t i = 0; i < h.density.size(); ++i)
        out << num(h.edges[i]) << ',' << num(h.edges[i + 1]) << ',' << num(h.density[i]) << '\n';
}

nlohmann::json RunManifest::to_json() const
{
    return {{"config_hash", config_hash},
            {"command", command},
            {"version", version},
            {"started", started},
            {"finished", finished},
            {"outputs", outputs}};
}

std::string utc_timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", &tm);
    return buf;
}

} // namespace srf
