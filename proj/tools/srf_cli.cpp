#include "srf/artifacts.hpp"
#include "srf/cache.hpp"
#include "srf/generror.hpp"
#include "srf/parallel.hpp"
#include "srf/simulate.hpp"
#include "srf/spectrum.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace srf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kToleranceFailure = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, sep);) out.push_back(part);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& what)
{
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw UsageError("invalid " + what + ": '" + s + "'");
    return v;
}

// "lo:hi:count" with lo < hi (or lo == hi when count == 1).
struct RangeSpec {
    double lo = 0.0;
    double hi = 0.0;
    long count = 0;

    std::vector<double> values() const
    {
        std::vector<double> v(count);
        for (long i = 0; i < count; ++i) v[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
        return v;
    }
};

RangeSpec parse_range(const std::string& s, const std::string& what, long min_count)
{
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw UsageError(what + " must look like min:max:count, got '" + s + "'");
    RangeSpec r{parse_number<double>(parts[0], what), parse_number<double>(parts[1], what),
                parse_number<long>(parts[2], what)};
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) throw UsageError(what + ": bounds must be finite");
    if (r.count < min_count) throw UsageError(what + ": count must be >= " + std::to_string(min_count));
    if (r.count > 1 && !(r.hi > r.lo)) throw UsageError(what + ": max must exceed min");
    return r;
}

int default_jobs()
{
    if (const char* env = std::getenv("SRF_JOBS")) {
        try {
            const int j = parse_number<int>(env, "SRF_JOBS");
            if (j >= 1) return j;
        } catch (const UsageError&) {
        }
        std::cerr << "warning: ignoring SRF_JOBS='" << env << "'\n";
    }
    return 1;
}

ExperimentConfig load_checked(const std::string& path, bool for_theory)
{
    const auto cfg = load_config(path);
    const auto rep = validate_config(cfg, for_theory);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    if (!rep.ok()) throw ConfigError("invalid config '" + path + "':\n" + rep.str());
    return cfg;
}

WeightModel parse_weights(const std::string& s)
{
    if (s == "gd") return WeightModel::gradient_step;
    if (s == "spiked") return WeightModel::spiked;
    throw UsageError("--weights must be gd or spiked");
}

const char* weights_name(WeightModel w)
{
    return w == WeightModel::spiked ? "spiked" : "gd";
}

std::string rel_path(const fs::path& p, const fs::path& base)
{
    return fs::relative(p, base).generic_string();
}

// Nonzero bulk eigenvalues of one run: the largest min(n, p - k).
std::vector<double> bulk_eigenvalues(const RunResult& r)
{
    const auto& e = r.eigenvalues;
    const long count = std::min<long>(r.config.n, r.config.p - r.config.vocab.k());
    return {e.data() + (e.size() - count), e.data() + e.size()};
}

struct SeedBatch {
    std::vector<RunResult> runs;
    McEstimate across;
    std::vector<double> pooled;
};

SeedBatch run_seeds(const ExperimentConfig& base, long seeds, const RunOptions& opt, int jobs)
{
    SeedBatch b;
    b.runs.resize(seeds);
    parallel_for(seeds, jobs, [&](long s) {
        auto cfg = base;
        cfg.seed = base.seed + std::uint64_t(s);
        b.runs[s] = run_experiment(cfg, opt);
    });
    double sum = 0.0, sq = 0.0;
    for (const auto& r : b.runs) {
        sum += r.gen_error.mean;
        sq += r.gen_error.mean * r.gen_error.mean;
        const auto e = bulk_eigenvalues(r);
        b.pooled.insert(b.pooled.end(), e.begin(), e.end());
    }
    std::sort(b.pooled.begin(), b.pooled.end());
    b.across.samples = seeds;
    b.across.mean = sum / double(seeds);
    b.across.stderr_ =
        seeds > 1 ? std::sqrt(std::max(0.0, sq / double(seeds) - b.across.mean * b.across.mean) * double(seeds) /
                              double(seeds - 1) / double(seeds))
                  : std::nan("");
    return b;
}

void write_manifest(const fs::path& out, RunManifest m)
{
    m.finished = utc_timestamp();
    write_json(out / "manifest.json", m.to_json());
}

struct Common {
    std::string config;
    std::string out = "out";
    int jobs = default_jobs();
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("config", c.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--jobs", c.jobs, "Worker threads (default from SRF_JOBS, else 1)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

int cmd_simulate(const Common& c, long seeds, const std::string& weights, long n_test, const std::string& command)
{
    const auto cfg = load_checked(c.config, false);
    RunOptions opt;
    opt.weights = parse_weights(weights);
    opt.n_test = n_test;
    const fs::path out = c.out;
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.command = command;
    man.started = utc_timestamp();

    const auto batch = run_seeds(cfg, seeds, opt, c.jobs);
    json per_seed = json::array();
    for (const auto& r : batch.runs) {
        auto j = run_to_json(r);
        j["base_config_hash"] = man.config_hash;
        j["weights"] = weights_name(opt.weights);
        const auto path = out / ("seed_" + std::to_string(r.config.seed) + ".json");
        write_json(path, j);
        man.outputs.push_back(rel_path(path, out));
        per_seed.push_back({{"seed", r.config.seed}, {"gen_error", r.gen_error.mean}});
    }
    const auto eig_path = out / "pooled_eigenvalues.csv";
    write_eigenvalues_csv(eig_path, Eigen::Map<const Eigen::VectorXd>(batch.pooled.data(), long(batch.pooled.size())),
                          man.config_hash);
    json agg{{"config_hash", man.config_hash},
             {"config", config_to_json(cfg)},
             {"weights", weights_name(opt.weights)},
             {"seeds", seeds},
             {"gen_error", {{"mean", batch.across.mean}, {"stderr", batch.across.stderr_}, {"per_seed", per_seed}}},
             {"pooled_eigenvalues", rel_path(eig_path, out)},
             {"pooled_count", long(batch.pooled.size())}};
    const auto agg_path = out / "aggregate.json";
    write_json(agg_path, agg);
    man.outputs.push_back(rel_path(eig_path, out));
    man.outputs.push_back(rel_path(agg_path, out));
    write_manifest(out, man);
    std::cout << "gen_error " << batch.across.mean << " +- " << batch.across.stderr_ << " over " << seeds << " seeds\n";
    return kOk;
}

TheoryModel model_with_alpha(const ExperimentConfig& cfg, std::optional<double> alpha)
{
    auto model = TheoryModel::from_config(cfg);
    if (!alpha) return model;
    auto spec = model.spec();
    spec.alpha = *alpha;
    return TheoryModel(spec);
}

json curve_meta(const std::string& hash, const DensityCurve& curve, const TheoryModel& model)
{
    json edges = json::array();
    for (const auto& [a, b] : support_edges(curve)) edges.push_back({a, b});
    return {{"config_hash", hash},
            {"alpha", model.spec().alpha},
            {"beta", model.spec().beta},
            {"mass", curve.mass},
            {"atom", curve.atom},
            {"eps_consistency", curve.eps_consistency},
            {"support", edges}};
}

int cmd_theory_spectrum(const Common& c, const std::string& grid, std::optional<double> alpha, bool no_cache,
                        const std::string& command)
{
    const auto g = parse_range(grid, "--grid", 2);
    if (alpha && !(*alpha >= 0.0)) throw UsageError("--alpha must be >= 0");
    const auto cfg = load_checked(c.config, false);
    auto model = model_with_alpha(cfg, alpha);
    const fs::path out = c.out;
    fs::create_directories(out);
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.command = command;
    man.started = utc_timestamp();

    std::optional<FixedPointCache> cache;
    // Theory inputs that are not in the config (alpha override) go into the cache key.
    const std::string key = man.config_hash + (alpha ? ":alpha=" + std::to_string(*alpha) : "");
    if (!no_cache) cache.emplace(out / "fixed_points.jsonl", key);
    const auto curve = density_grid(model, g.lo, g.hi, int(g.count), default_eps_schedule(), {},
                                    cache ? &*cache : nullptr, c.jobs);
    if (cache) cache->flush();
    const auto path = out / "density.csv";
    write_density_csv(path, curve, curve_meta(man.config_hash, curve, model));
    man.outputs.push_back(rel_path(path, out));
    write_manifest(out, man);
    std::cout << "mass " << curve.mass << " atom " << curve.atom;
    if (cache) std::cout << " cache_hits " << cache->hits();
    std::cout << '\n';
    return kOk;
}

SweepRow theory_row(const TheoryModel& model, double lambda)
{
    const auto r = asymptotic_generror(model, lambda);
    SweepRow row;
    row.alpha = model.spec().alpha;
    row.theory = r.gen_error;
    row.tau = r.tau;
    return row;
}

int cmd_theory_generror(const Common& c, const std::string& sweep, const std::string& command)
{
    const auto s = parse_range(sweep, "--alpha-sweep", 1);
    if (!(s.lo > 0.0)) throw UsageError("--alpha-sweep: alpha must be > 0");
    const auto cfg = load_checked(c.config, true);
    const fs::path out = c.out;
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.command = command;
    man.started = utc_timestamp();

    const auto alphas = s.values();
    std::vector<SweepRow> rows(alphas.size());
    parallel_for(long(alphas.size()), c.jobs,
                 [&](long i) { rows[i] = theory_row(model_with_alpha(cfg, alphas[i]), cfg.lambda); });
    const auto path = out / "generror.csv";
    write_sweep_csv(path, rows, {{"config_hash", man.config_hash}, {"lambda", cfg.lambda}, {"beta", cfg.beta()}});
    man.outputs.push_back(rel_path(path, out));
    write_manifest(out, man);
    for (const auto& r : rows) std::cout << "alpha " << r.alpha << " gen_error " << r.theory << '\n';
    return kOk;
}

struct Tolerances {
    double ks = 0.03;
    double gen_rel = 0.05;
};

json check(const std::string& name, double value, double tol)
{
    const bool pass = std::isfinite(value) && value < tol;
    return {{"name", name}, {"value", std::isfinite(value) ? json(value) : json(nullptr)}, {"tolerance", tol}, {"pass", pass}};
}

int cmd_compare(const Common& c, long seeds, const std::string& weights, long n_test, const std::string& grid,
                const Tolerances& tol, const std::string& command)
{
    const auto cfg = load_checked(c.config, true);
    RunOptions opt;
    opt.weights = parse_weights(weights);
    opt.n_test = n_test;
    std::optional<RangeSpec> g;
    if (!grid.empty()) g = parse_range(grid, "--grid", 2);
    const fs::path out = c.out;
    fs::create_directories(out);
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.command = command;
    man.started = utc_timestamp();
    json checks = json::array(), errors = json::array();

    std::optional<SeedBatch> batch;
    try {
        batch = run_seeds(cfg, seeds, opt, c.jobs);
    } catch (const std::exception& e) {
        errors.push_back(std::string("simulation: ") + e.what());
    }
    const auto model = TheoryModel::from_config(cfg);
    std::optional<DensityCurve> curve;
    double lo = 0.0, hi = 4.0;
    long points = 400;
    if (g) {
        lo = g->lo, hi = g->hi, points = g->count;
    } else if (batch && !batch->pooled.empty()) {
        hi = 1.3 * batch->pooled.back();
    }
    try {
        curve = density_grid(model, lo, hi, int(points), default_eps_schedule(), {}, nullptr, c.jobs);
    } catch (const std::exception& e) {
        errors.push_back(std::string("theory spectrum: ") + e.what());
    }
    std::optional<SweepRow> theory;
    try {
        theory = theory_row(model, cfg.lambda);
    } catch (const std::exception& e) {
        errors.push_back(std::string("theory gen error: ") + e.what());
    }

    if (curve) {
        const auto path = out / "density.csv";
        write_density_csv(path, *curve, curve_meta(man.config_hash, *curve, model));
        man.outputs.push_back(rel_path(path, out));
    }
    if (batch) {
        const auto h = histogram(batch->pooled, lo, hi, 80);
        const auto path = out / "spectrum_histogram.csv";
        write_histogram_csv(path, h, {{"config_hash", man.config_hash}, {"count", long(batch->pooled.size())}});
        man.outputs.push_back(rel_path(path, out));
    }
    double ks = std::nan("");
    if (curve && batch && !batch->pooled.empty()) {
        const Eigen::Map<const Eigen::VectorXd> e(batch->pooled.data(), long(batch->pooled.size()));
        ks = ks_distance(*curve, e, e.size());
    }
    checks.push_back(check("spectrum_ks", ks, tol.ks));

    SweepRow row;
    row.alpha = cfg.alpha();
    if (theory) row = *theory;
    if (batch) {
        row.sim_mean = batch->across.mean;
        row.sim_stderr = batch->across.stderr_;
    }
    if (theory || batch) {
        const auto path = out / "generror_overlay.csv";
        write_sweep_csv(path, {row}, {{"config_hash", man.config_hash}, {"lambda", cfg.lambda}});
        man.outputs.push_back(rel_path(path, out));
    }
    const double gap = theory && batch ? std::abs(row.sim_mean - row.theory) / std::abs(row.theory) : std::nan("");
    checks.push_back(check("gen_error_relative_gap", gap, tol.gen_rel));

    bool pass = errors.empty();
    for (const auto& ch : checks) pass = pass && ch["pass"].get<bool>();
    const auto path = out / "summary.json";
    write_json(path, {{"config_hash", man.config_hash},
                      {"seeds", seeds},
                      {"weights", weights_name(opt.weights)},
                      {"pass", pass},
                      {"checks", checks},
                      {"errors", errors}});
    man.outputs.push_back(rel_path(path, out));
    write_manifest(out, man);
    for (const auto& ch : checks)
        std::cout << (ch["pass"].get<bool>() ? "PASS " : "FAIL ") << ch["name"].get<std::string>() << ' '
                  << ch["value"].dump() << " (tolerance " << ch["tolerance"].dump() << ")\n";
    for (const auto& e : errors) std::cout << "ERROR " << e.get<std::string>() << '\n';
    return pass ? kOk : kToleranceFailure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spiked random-features laboratory: simulation, theory and comparison."};
    app.require_subcommand(1);
    std::string command;
    for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

    Common common;
    long seeds = 1, n_test = 10000;
    std::string weights = "gd", grid = "0:4:400", sweep, compare_grid;
    std::optional<double> alpha;
    bool no_cache = false;
    Tolerances tol;

    auto* sim = app.add_subcommand("simulate", "Train and evaluate the network for consecutive seeds");
    add_common(sim, common);
    sim->add_option("--seeds", seeds, "Number of seeds, starting at the config seed")->check(CLI::PositiveNumber);
    sim->add_option("--weights", weights, "gd (one gradient step) or spiked (W0 + u w*^T)")->capture_default_str();
    sim->add_option("--n-test", n_test, "Monte Carlo test points")->check(CLI::PositiveNumber)->capture_default_str();

    auto* spec = app.add_subcommand("theory-spectrum", "Bulk spectral density from the fixed point");
    add_common(spec, common);
    spec->add_option("--grid", grid, "min:max:points")->capture_default_str();
    spec->add_option("--alpha", alpha, "Override the sample ratio n/d");
    spec->add_flag("--no-cache", no_cache, "Do not read or write the fixed-point cache");

    auto* gen = app.add_subcommand("theory-generror", "Asymptotic generalization error over a sweep of n/d");
    add_common(gen, common);
    gen->add_option("--alpha-sweep", sweep, "min:max:count")->required();

    auto* cmp = app.add_subcommand("compare", "Overlay simulation against theory and check tolerances");
    std::string cmp_weights = "spiked";
    long cmp_seeds = 5;
    add_common(cmp, common);
    cmp->add_option("--seeds", cmp_seeds, "Number of seeds")->check(CLI::PositiveNumber)->capture_default_str();
    cmp->add_option("--weights", cmp_weights, "gd or spiked")->capture_default_str();
    cmp->add_option("--n-test", n_test, "Monte Carlo test points")->check(CLI::PositiveNumber)->capture_default_str();
    cmp->add_option("--grid", compare_grid, "min:max:points (default 0 to 1.3 x largest eigenvalue, 400 points)");
    cmp->add_option("--ks-tol", tol.ks, "Spectrum KS tolerance")->capture_default_str();
    cmp->add_option("--gen-tol", tol.gen_rel, "Relative gen-error gap tolerance")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*sim) return cmd_simulate(common, seeds, weights, n_test, command);
        if (*spec) return cmd_theory_spectrum(common, grid, alpha, no_cache, command);
        if (*gen) return cmd_theory_generror(common, sweep, command);
        if (*cmp) return cmd_compare(common, cmp_seeds, cmp_weights, n_test, compare_grid, tol, command);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kToleranceFailure;
    }
    return kUsage;
}
