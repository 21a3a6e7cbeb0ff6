#include "srf/generror.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srf {

SchurBlock schur_C_inverse(const TheoryModel& model, const FixedPointState& s)
{
    SchurBlock sb;
    sb.dk = blocks(model, s);
    sb.T = theta_kernel(sb.dk);
    if (!sb.T.allFinite()) throw std::runtime_error("schur_C_inverse: singular psi kernel");
    const int k1 = model.k() + 1;
    sb.Cinv = sb.dk.A11 - s.z * Eigen::MatrixXcd::Identity(k1, k1) - sb.dk.A21.transpose() * sb.T * sb.dk.A21;
    return sb;
}

namespace {

Eigen::MatrixXd mean_block(const SchurBlock& sb, double lambda)
{
    const int k = static_cast<int>(sb.Cinv.rows()) - 1;
    Eigen::MatrixXd M = sb.Cinv.real().bottomRightCorner(k, k);
    M.diagonal().array() -= lambda;
    return M;
}

} // namespace

double mean_block_rcond(const SchurBlock& sb, double lambda)
{
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(mean_block(sb, lambda));
    const auto& s = svd.singularValues();
    return s[0] > 0.0 ? s[s.size() - 1] / s[0] : 0.0;
}

Eigen::VectorXd tau0(const SchurBlock& sb, double lambda)
{
    const int k = static_cast<int>(sb.Cinv.rows()) - 1;
    const Eigen::MatrixXd M = mean_block(sb, lambda);
    const Eigen::VectorXd rhs = sb.Cinv.real().col(0).tail(k);
    // Minimum-norm solve: collinear mean functions (e.g. odd sigma with opposite vocabulary values)
    // leave the split among them undetermined but not the fitted function. Directions below
    // 1e-10 relative sit at the fixed-point accuracy and are dropped.
    // Vanishing mean functions (odd sigma, no spike) carry nothing to fit.
    const double scale = std::max(1.0, sb.Cinv.cwiseAbs().maxCoeff());
    if (M.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
        if (rhs.cwiseAbs().maxCoeff() > 1e-13 * scale) throw std::runtime_error("tau0: singular mean block");
        return Eigen::VectorXd::Zero(k);
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
    cod.setThreshold(1e-10);
    return cod.solve(rhs);
}

namespace {

Eigen::VectorXcd readout(const Eigen::VectorXd& t0)
{
    Eigen::VectorXcd v(t0.size() + 1);
    v[0] = 1.0;
    v.tail(t0.size()) = -t0.cast<cd>();
    return v;
}

double quad_form(const Eigen::MatrixXcd& C, const Eigen::VectorXcd& v)
{
    return (v.transpose() * C * v)(0, 0).real();
}

} // namespace

Eigen::VectorXd tau1(const SchurBlock& sb, const Eigen::VectorXd& t0)
{
    return (sb.T * sb.dk.A21 * readout(t0)).real();
}

TauDerivatives tau2_tau3(const TheoryModel& model, const FixedPointState& base, const Eigen::VectorXd& t0, double step,
                         const SolverOptions& opt)
{
    if (step < 1e-6 || step > 1e-3) throw std::invalid_argument("tau2_tau3: step outside [1e-6, 1e-3]");
    const Eigen::VectorXcd v = readout(t0);
    auto value = [&](double r1, double r2) {
        const FixedPointState s = solve_fixed_point(model, base.z, r1, r2, &base, opt);
        return quad_form(schur_C_inverse(model, s).Cinv, v);
    };
    auto central = [&](double h, bool first) {
        return first ? (value(h, 0.0) - value(-h, 0.0)) / (2.0 * h) : (value(0.0, h) - value(0.0, -h)) / (2.0 * h);
    };
    TauDerivatives d;
    d.step = step;
    d.tau2 = central(step, true);
    d.tau3 = central(step, false);
    d.tau2_half = central(0.5 * step, true);
    d.tau3_half = central(0.5 * step, false);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-12); };
    d.stable = rel(d.tau2, d.tau2_half) <= 1e-4 && rel(d.tau3, d.tau3_half) <= 1e-4;
    return d;
}

double lambda_kappa(const TheoryModel& model, const TauSet& tau, double kappa)
{
    const int k = model.k();
    double mean = model.spec().g->f(kappa), lin = 0.0;
    for (int q = 0; q < k; ++q) {
        const auto sm = shifted_moments(*model.spec().sigma, kappa * model.spec().zeta[q]);
        mean -= sm.c0 * tau.tau0[q];
        lin += sm.c1 * tau.tau1[q];
    }
    const double bracket = mean - kappa * lin;
    return bracket * bracket - lin * lin + tau.tau2 + tau.tau3;
}

double expected_lambda(const TheoryModel& model, const TauSet& tau)
{
    const auto& rule = model.rule();
    const Eigen::VectorXd lin = model.c1 * tau.tau1;
    const Eigen::VectorXd mean = model.gk - model.c0 * tau.tau0;
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
        const double br = mean[i] - rule.nodes[i] * lin[i];
        acc += rule.weights[i] * (br * br - lin[i] * lin[i]);
    }
    return acc + tau.tau2 + tau.tau3;
}

SolverOptions generror_solver_options()
{
    SolverOptions o;
    o.tol = 1e-13;
    return o;
}

GenErrorResult asymptotic_generror(const TheoryModel& model, double lambda, const SolverOptions& opt)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("asymptotic_generror: lambda must be > 0");
    GenErrorResult r;
    r.state = solve_fixed_point(model, cd(-lambda, 0.0), 0.0, 0.0, nullptr, opt);
    const SchurBlock sb = schur_C_inverse(model, r.state);
    r.tau.provenance = TauSet::Provenance::asymptotic;
    r.tau.tau0 = tau0(sb, lambda);
    r.mean_block_rcond = mean_block_rcond(sb, lambda);
    r.tau.tau1 = tau1(sb, r.tau.tau0);
    r.derivatives = tau2_tau3(model, r.state, r.tau.tau0, 1e-4, opt);
    r.tau.tau2 = r.derivatives.tau2;
    r.tau.tau3 = r.derivatives.tau3;
    r.gen_error = expected_lambda(model, r.tau);
    return r;
}

GenErrorResult asymptotic_generror(const ExperimentConfig& cfg, Normalization norm)
{
    return asymptotic_generror(TheoryModel::from_config(cfg, norm), cfg.lambda);
}

} // namespace srf
