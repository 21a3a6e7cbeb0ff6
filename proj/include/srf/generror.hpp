#pragma once

#include "srf/detequiv.hpp"
#include "srf/simulate.hpp"

namespace srf {

// Schur block of the deterministic equivalent on the (label, means) coordinates.
struct SchurBlock {
    Eigen::MatrixXcd Cinv;   // (k+1) x (k+1); index 0 = label
    Eigen::MatrixXcd T;      // (psi^{-1} + S)^{-1}
    DerivedKernels dk;
};

SchurBlock schur_C_inverse(const TheoryModel& model, const FixedPointState& s);

// Group-mean readout weights: [Cinv_11 - lambda I]^{-1} Cinv_10.
Eigen::VectorXd tau0(const SchurBlock& sb, double lambda);
double mean_block_rcond(const SchurBlock& sb, double lambda);
// T A21 (1, -tau0).
Eigen::VectorXd tau1(const SchurBlock& sb, const Eigen::VectorXd& t0);

struct TauDerivatives {
    double tau2 = 0.0;
    double tau3 = 0.0;
    double tau2_half = 0.0;    // same stencil at half the step
    double tau3_half = 0.0;
    double step = 0.0;
    bool stable = false;       // halving changed neither value by more than 1e-4 relative
};

TauDerivatives tau2_tau3(const TheoryModel& model, const FixedPointState& base, const Eigen::VectorXd& t0,
                         double step = 1e-4, const SolverOptions& opt = {});

// Integrand at one kappa.
double lambda_kappa(const TheoryModel& model, const TauSet& tau, double kappa);
// E_kappa over the model's quadrature.
double expected_lambda(const TheoryModel& model, const TauSet& tau);

struct GenErrorResult {
    FixedPointState state;
    TauSet tau;
    TauDerivatives derivatives;
    double gen_error = 0.0;
    // Smallest over largest singular value of the mean block solved for tau0; values near
    // the fixed-point tolerance mean the mean features are numerically collinear.
    double mean_block_rcond = 1.0;
};

// Solver tolerances used for the ridge point and its rho-perturbations.
SolverOptions generror_solver_options();

GenErrorResult asymptotic_generror(const TheoryModel& model, double lambda, const SolverOptions& opt = generror_solver_options());
GenErrorResult asymptotic_generror(const ExperimentConfig& cfg, Normalization norm = kFrozenNormalization);

} // namespace srf
