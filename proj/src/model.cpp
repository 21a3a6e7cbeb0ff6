#include "srf/model.hpp"

#include "srf/quadrature.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace srf {

long default_n0(long d)
{
    return static_cast<long>(std::ceil(std::pow(double(d), 1.2) - 1e-9));
}

std::string ValidationReport::str() const
{
    std::ostringstream os;
    for (auto& e : errors) os << "error: " << e << "\n";
    for (auto& w : warnings) os << "warning: " << w << "\n";
    return os.str();
}

ValidationReport validate_config(const ExperimentConfig& cfg, bool for_theory)
{
    ValidationReport rep;
    const PointwiseFn* sigma = nullptr;
    const PointwiseFn* g = nullptr;
    try {
        sigma = &activation(cfg.activation);
    } catch (const std::exception& e) {
        rep.errors.push_back(e.what());
    }
    try {
        g = &link(cfg.link);
    } catch (const std::exception& e) {
        rep.errors.push_back(e.what());
    }
    if (!sigma || !g) return rep;
    return validate_config(cfg, *sigma, *g, for_theory);
}

ValidationReport validate_config(const ExperimentConfig& cfg, const PointwiseFn& sigma, const PointwiseFn& g,
                                 bool for_theory)
{
    ValidationReport rep;
    if (cfg.d < 1 || cfg.p < 1 || cfg.n < 1 || cfg.n0 < 1) rep.errors.push_back("d, p, n, n0 must all be >= 1");
    if (!std::isfinite(cfg.eta_tilde) || cfg.eta_tilde < 0.0) rep.errors.push_back("eta_tilde must be finite and >= 0");
    if (for_theory && !(cfg.lambda > 0.0)) rep.errors.push_back("lambda must be > 0 for theory evaluation");
    if (!for_theory && cfg.lambda < 0.0) rep.errors.push_back("lambda must be >= 0");

    const auto& v = cfg.vocab;
    if (v.zeta.empty()) rep.errors.push_back("vocabulary is empty");
    if (v.zeta.size() != v.pi.size()) rep.errors.push_back("vocabulary zeta and pi differ in length");
    double total = 0.0;
    bool negative = false;
    for (double q : v.pi) {
        total += q;
        negative = negative || !(q >= 0.0);
    }
    if (negative || std::abs(total - 1.0) > 1e-12)
        rep.errors.push_back("pi is not a probability distribution (sum " + std::to_string(total) + ")");
    std::set<double> distinct(v.zeta.begin(), v.zeta.end());
    if (distinct.size() != v.zeta.size()) rep.errors.push_back("vocabulary zeta entries are not pairwise distinct");

    if (std::abs(gaussian_mean(g)) > 1e-8) rep.warnings.push_back("E[g] != 0");
    if (std::abs(first_hermite(g)) < 1e-10) rep.warnings.push_back("E[g'] = 0: the target has no linear component");
    if (!is_odd(sigma)) rep.warnings.push_back("activation '" + sigma.id + "' is not odd");
    if (std::abs(gaussian_mean(sigma)) > 1e-8) rep.warnings.push_back("E[sigma] != 0");
    if (cfg.d > 1 && cfg.n0 >= 1 && std::log(double(cfg.n0)) / std::log(double(cfg.d)) < 1.05)
        rep.warnings.push_back("n0 grows slower than d^(1+eps)");
    return rep;
}

bool check_nondegeneracy(const std::vector<double>& zeta, const PointwiseFn& sigma, int m)
{
    const int k = static_cast<int>(zeta.size());
    if (m < k) throw std::invalid_argument("check_nondegeneracy: need m >= k");
    const QuadratureRule rule = gauss_hermite_rule(std::max(m, 2));
    Eigen::MatrixXd M(m, k);
    for (int i = 0; i < m; ++i)
        for (int q = 0; q < k; ++q) M(i, q) = shifted_moments(sigma, rule.nodes[i] * zeta[q]).c1;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] <= 0.0) return false;
    return s[s.size() - 1] / s[0] > 1e-8;
}

SecondLayer sample_second_layer(long p, const Vocabulary& vocab, CounterRng& rng)
{
    const int k = vocab.k();
    std::vector<double> cum(k);
    std::partial_sum(vocab.pi.begin(), vocab.pi.end(), cum.begin());
    std::vector<int> draw(p);
    for (long j = 0; j < p; ++j) {
        const double u = rng.uniform() * cum.back();
        int q = 0;
        while (q < k - 1 && u >= cum[q]) ++q;
        draw[j] = q;
    }
    SecondLayer out;
    out.sizes.assign(k, 0);
    for (int q : draw) ++out.sizes[q];
    out.offsets.assign(k + 1, 0);
    for (int q = 0; q < k; ++q) out.offsets[q + 1] = out.offsets[q] + out.sizes[q];
    out.group.resize(p);
    out.a0.resize(p);
    const double s = 1.0 / std::sqrt(double(p));
    for (int q = 0; q < k; ++q)
        for (long j = out.offsets[q]; j < out.offsets[q + 1]; ++j) {
            out.group[j] = q;
            out.a0[j] = vocab.zeta[q] * s;
        }
    return out;
}

std::vector<double> spike_vocabulary(const ExperimentConfig& cfg, const PointwiseFn& sigma, const PointwiseFn& g)
{
    const double scale = cfg.eta_tilde * first_hermite(sigma) * first_hermite(g) / cfg.beta();
    std::vector<double> out;
    for (double z : cfg.vocab.zeta) out.push_back(scale * z);
    return out;
}

ExperimentConfig config_from_json(const nlohmann::json& j)
{
    static const std::set<std::string> allowed = {"d", "p", "n", "n0", "eta_tilde", "lambda",
                                                  "seed", "activation", "link", "vocab"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
    for (const char* key : {"d", "p", "n", "eta_tilde", "lambda", "seed", "activation", "link", "vocab"})
        if (!j.contains(key)) throw ConfigError(std::string("missing config key '") + key + "'");
    ExperimentConfig c;
    try {
        c.d = j.at("d").get<long>();
        c.p = j.at("p").get<long>();
        c.n = j.at("n").get<long>();
        c.n0 = (j.contains("n0") && !j.at("n0").is_null()) ? j.at("n0").get<long>() : default_n0(c.d);
        c.eta_tilde = j.at("eta_tilde").get<double>();
        c.lambda = j.at("lambda").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.activation = j.at("activation").get<std::string>();
        c.link = j.at("link").get<std::string>();
        const auto& v = j.at("vocab");
        if (!v.is_object()) throw ConfigError("vocab must be an object");
        for (auto it = v.begin(); it != v.end(); ++it)
            if (it.key() != "zeta" && it.key() != "pi") throw ConfigError("unknown vocab key '" + it.key() + "'");
        c.vocab.zeta = v.at("zeta").get<std::vector<double>>();
        c.vocab.pi = v.at("pi").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c)
{
    return {{"d", c.d},
            {"p", c.p},
            {"n", c.n},
            {"n0", c.n0},
            {"eta_tilde", c.eta_tilde},
            {"lambda", c.lambda},
            {"seed", c.seed},
            {"activation", c.activation},
            {"link", c.link},
            {"vocab", {{"zeta", c.vocab.zeta}, {"pi", c.vocab.pi}}}};
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg)
{
    const std::string s = config_to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

} // namespace srf
