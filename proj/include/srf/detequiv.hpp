#pragma once

#include "srf/functions.hpp"
#include "srf/model.hpp"
#include "srf/quadrature.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <complex>
#include <stdexcept>
#include <vector>

namespace srf {

using cd = std::complex<double>;

// Sample-ratio and Stieltjes conventions. per_input: V carries alpha and m = beta * sum(b).
// per_width: V carries n/p = alpha/beta and m = sum(b) / beta.
enum class Normalization { per_input, per_width };

// Convention selected by the random-features calibration run.
constexpr Normalization kFrozenNormalization = Normalization::per_width;

const char* to_string(Normalization n);

struct TheorySpec {
    const PointwiseFn* sigma = nullptr;
    const PointwiseFn* g = nullptr;
    std::vector<double> zeta;   // spike vocabulary zeta^u_q
    std::vector<double> pi;
    double alpha = 1.0;
    double beta = 1.0;
    Normalization norm = kFrozenNormalization;
    int outer_nodes = kOuterNodes;
};

// Quadrature tables over kappa shared by every solve.
class TheoryModel {
public:
    explicit TheoryModel(const TheorySpec& spec);
    static TheoryModel from_config(const ExperimentConfig& cfg, Normalization norm = kFrozenNormalization,
                                   int outer_nodes = kOuterNodes);

    const TheorySpec& spec() const { return spec_; }
    int k() const { return k_; }
    double alpha() const { return spec_.alpha; }
    double beta() const { return spec_.beta; }
    double sample_ratio() const;
    const QuadratureRule& rule() const { return rule_; }

    // Rows are kappa nodes, columns vocabulary entries.
    Eigen::MatrixXd c0, c1, r;
    Eigen::VectorXd gk;
    Eigen::MatrixXd Cbar;   // E[c1 c1^T]
    Eigen::VectorXd Dbar;   // E[r]
    Eigen::VectorXd pi;

private:
    TheorySpec spec_;
    int k_ = 0;
    QuadratureRule rule_;
};

struct FixedPointState {
    cd z{0.0, 1.0};
    double rho1 = 0.0;
    double rho2 = 0.0;
    Eigen::MatrixXcd V;
    Eigen::VectorXcd nu;
    Eigen::VectorXcd b;
    double residual = 0.0;
    int iterations = 0;
};

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    double ladder_top = 10.0;
    double ladder_factor = 0.7;
    double gamma0 = 0.5;
};

class FixedPointError : public std::runtime_error {
public:
    FixedPointError(const std::string& what, double residual) : std::runtime_error(what), residual(residual) {}
    double residual;
};

FixedPointState cold_state(const TheoryModel& model, cd z, double rho1 = 0.0, double rho2 = 0.0);

// L = (V^{-1} + diag b)^{-1} written as V (I + diag(b) V)^{-1}.
Eigen::MatrixXcd kernel_L(const Eigen::MatrixXcd& V, const Eigen::VectorXcd& b);
Eigen::MatrixXcd kernel_psi(const Eigen::MatrixXcd& L, const Eigen::VectorXcd& b);

// chi(z; kappa) at an arbitrary kappa and at the model's quadrature nodes.
cd chi(const TheoryModel& model, const FixedPointState& s, double kappa);
Eigen::VectorXcd chi_nodes(const TheoryModel& model, const FixedPointState& s);

FixedPointState fixed_point_map(const TheoryModel& model, const FixedPointState& s);
double map_residual(const TheoryModel& model, const FixedPointState& s);

// Damped iteration to a single z.
FixedPointState iterate(const TheoryModel& model, FixedPointState s, const SolverOptions& opt = {});

FixedPointState solve_fixed_point(const TheoryModel& model, cd z, double rho1 = 0.0, double rho2 = 0.0,
                                  const FixedPointState* warm = nullptr, const SolverOptions& opt = {});

bool sign_conditions_hold(const FixedPointState& s, double tol = 1e-9);

// Stieltjes transform under the model's convention.
cd stieltjes_from_state(const TheoryModel& model, const FixedPointState& s);

struct DerivedKernels {
    Eigen::MatrixXcd L;
    Eigen::MatrixXcd psi;
    Eigen::MatrixXcd S;
    Eigen::MatrixXcd A11;   // (k+1)x(k+1), iota = (g, c0_1..c0_k)
    Eigen::MatrixXcd A21;   // k x (k+1)
    Eigen::VectorXcd chi;   // at quadrature nodes
};

DerivedKernels blocks(const TheoryModel& model, const FixedPointState& s);

// (psi^{-1} + S)^{-1} without inverting psi.
Eigen::MatrixXcd theta_kernel(const DerivedKernels& dk);

// Dense (k+1+p) deterministic equivalent of the extended resolvent.
Eigen::MatrixXcd assemble_Ge(const TheoryModel& model, const FixedPointState& s, const Eigen::VectorXd& theta,
                             const std::vector<int>& group);

nlohmann::json state_to_json(const FixedPointState& s);
FixedPointState state_from_json(const nlohmann::json& j);

} // namespace srf
