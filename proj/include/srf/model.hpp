#pragma once

#include "srf/functions.hpp"
#include "srf/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace srf {

// Second-layer vocabulary: a0_j = zeta_q / sqrt(p) with probability pi_q.
struct Vocabulary {
    std::vector<double> zeta;
    std::vector<double> pi;

    int k() const { return static_cast<int>(zeta.size()); }
};

struct ExperimentConfig {
    long d = 0;
    long p = 0;
    long n = 0;
    long n0 = 0;
    double eta_tilde = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string activation = "tanh";
    std::string link = "sin";
    Vocabulary vocab{{1.0}, {1.0}};

    double alpha() const { return double(n) / double(d); }
    double beta() const { return double(p) / double(d); }
    double eta() const { return eta_tilde * double(d); }
};

long default_n0(long d);

struct ValidationReport {
    std::vector<std::string> warnings;
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }
    std::string str() const;
};

ValidationReport validate_config(const ExperimentConfig& cfg, bool for_theory = true);
ValidationReport validate_config(const ExperimentConfig& cfg, const PointwiseFn& sigma, const PointwiseFn& g,
                                 bool for_theory = true);

// Rank test of [c_1(kappa_i, zeta_q)] over m quadrature nodes.
bool check_nondegeneracy(const std::vector<double>& zeta, const PointwiseFn& sigma, int m = 64);

struct SecondLayer {
    Eigen::VectorXd a0;              // scaled by 1/sqrt(p)
    std::vector<int> group;          // group index per neuron
    std::vector<long> sizes;         // p_q
    std::vector<long> offsets;       // start of each contiguous group, size k+1
};

SecondLayer sample_second_layer(long p, const Vocabulary& vocab, CounterRng& rng);

// Spike coefficient per vocabulary entry: u_j = eta c1 c1* a0_j / sqrt(p).
std::vector<double> spike_vocabulary(const ExperimentConfig& cfg, const PointwiseFn& sigma, const PointwiseFn& g);

// JSON config with keys exactly {d,p,n,n0,eta_tilde,lambda,seed,activation,link,vocab}.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
std::string config_hash(const ExperimentConfig& cfg);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace srf
