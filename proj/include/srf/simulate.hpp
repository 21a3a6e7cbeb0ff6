#pragma once

#include "srf/functions.hpp"
#include "srf/model.hpp"
#include "srf/rng.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

namespace srf {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SampledData {
    Eigen::MatrixXd X;   // n x d
    Eigen::VectorXd y;
    Eigen::VectorXd kappa;
};

SampledData sample_data(long n, long d, const Eigen::VectorXd& w_star, const PointwiseFn& g, CounterRng& rng);

// p x d, rows uniform on the unit sphere.
Eigen::MatrixXd sample_first_layer(long p, long d, CounterRng& rng);
Eigen::VectorXd sample_target(long d, CounterRng& rng);

// One full-batch step on the square loss, eta = eta_tilde * d.
Eigen::MatrixXd gradient_step(const Eigen::MatrixXd& W0, const Eigen::VectorXd& a0, const Eigen::MatrixXd& X0,
                              const Eigen::VectorXd& y0, double eta, const PointwiseFn& sigma);

// u = eta c1 c1* a0 / sqrt(p).
Eigen::VectorXd spike_vector(const Eigen::VectorXd& a0, double eta, double c1, double c1_star);
Eigen::MatrixXd spiked_approximation(const Eigen::MatrixXd& W0, const Eigen::VectorXd& a0, double eta,
                                     const Eigen::VectorXd& w_star, double c1, double c1_star);

// Raw spike direction X0^T y0 / n0 and its unit-normalized form.
struct SpikeDirection {
    Eigen::VectorXd raw;
    Eigen::VectorXd unit;
};
SpikeDirection spike_direction(const Eigen::MatrixXd& X0, const Eigen::VectorXd& y0);

struct PowerIterationResult {
    double norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Operator norm by power iteration on A^T A.
PowerIterationResult operator_norm(const Eigen::MatrixXd& A, double tol = 1e-8, int max_iter = 500);
double spike_deviation(const Eigen::MatrixXd& W1, const Eigen::MatrixXd& W_tilde);

Eigen::MatrixXd features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X, const PointwiseFn& sigma);

struct ExtendedFeatureMatrix {
    Eigen::MatrixXd Phi;
    Eigen::VectorXd y;
    Eigen::VectorXd kappa;
    Eigen::MatrixXd mean;       // n x k
    Eigen::MatrixXd centered;   // n x p
    Eigen::MatrixXd Phi_e;      // n x (1+k+p): y, means, centered
};

ExtendedFeatureMatrix extended_features(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                        const std::vector<long>& offsets, const Eigen::VectorXd& kappa = {});

enum class RidgePath { automatic, primal, dual };

Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda,
                          RidgePath path = RidgePath::automatic);

// Gradient norm of the ridge objective at a.
double ridge_gradient_norm(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda, const Eigen::VectorXd& a);

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long samples = 0;
};

McEstimate empirical_generror(const Eigen::VectorXd& a_hat, const Eigen::MatrixXd& W, const PointwiseFn& sigma,
                              const PointwiseFn& g, const Eigen::VectorXd& w_star, long n_test, CounterRng& rng,
                              long batch = 2000);

struct TauSet {
    enum class Provenance { asymptotic, empirical };
    Eigen::VectorXd tau0;
    Eigen::VectorXd tau1;
    double tau2 = 0.0;
    double tau3 = 0.0;
    Provenance provenance = Provenance::asymptotic;
};

// tau0_q = a^T e^q, tau1_q = a^T (e^q . theta) with e^q_j = 1/sqrt(p) on group q;
// tau2 = a^T (C_e . W W^T) a / p, tau3 = a^T D_e a / p.
TauSet empirical_tau(const Eigen::VectorXd& a_hat, const std::vector<long>& offsets, const Eigen::VectorXd& theta,
                     const Eigen::MatrixXd& W, const Eigen::MatrixXd& Cbar, const Eigen::VectorXd& Dbar);

// Sorted eigenvalues of centered^T centered / p (length p).
Eigen::VectorXd bulk_spectrum(const Eigen::MatrixXd& centered);
std::complex<double> empirical_stieltjes(const Eigen::VectorXd& eigs, std::complex<double> z);

// Trace of A G_e(z) with A = s I + sum_r u_r v_r^T.
struct TraceOperator {
    double identity_scale = 0.0;
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> terms;

    static TraceOperator unit_mass(long dim, long index);
    static TraceOperator normalized_trace(long dim);
};

class ResolventSpectrum {
public:
    // Eigendecomposition of Phi_e^T Phi_e / p; p is the number of neurons.
    ResolventSpectrum(const Eigen::MatrixXd& Phi_e, long p);
    std::complex<double> trace(const TraceOperator& A, std::complex<double> z) const;
    long dim() const { return static_cast<long>(evals_.size()); }

private:
    Eigen::VectorXd evals_;
    Eigen::MatrixXd evecs_;
};

std::complex<double> extended_resolvent_trace(const Eigen::MatrixXd& Phi_e, const TraceOperator& A,
                                              std::complex<double> z, long p);

struct CovarianceDiagnostic {
    double empirical = 0.0;
    double predicted = 0.0;
    double gap = 0.0;
};

// Mean squared row norm of W1 - u v^T against 1 + E[s'_{>1}^2] eta_tilde^2 E[g^2] / alpha0.
CovarianceDiagnostic bulk_covariance_diagnostic(const Eigen::MatrixXd& W0, const Eigen::VectorXd& a0,
                                                const Eigen::MatrixXd& X0, const Eigen::VectorXd& y0, double eta,
                                                const PointwiseFn& sigma, const PointwiseFn& g);

enum class WeightModel { gradient_step, spiked };

struct RunOptions {
    WeightModel weights = WeightModel::gradient_step;
    long n_test = 10000;
    bool keep_features = false;
    bool compute_spectrum = true;
    bool compute_deviation = true;
};

struct RunResult {
    ExperimentConfig config;
    SecondLayer layer;
    Eigen::MatrixXd W0;
    Eigen::MatrixXd W1;
    Eigen::VectorXd w_star;
    Eigen::VectorXd theta;
    Eigen::VectorXd u;
    Eigen::VectorXd a_hat;
    Eigen::VectorXd eigenvalues;
    std::optional<ExtendedFeatureMatrix> features;
    TauSet tau;
    McEstimate gen_error;
    double spike_deviation = 0.0;
};

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

} // namespace srf
