#include "srf/detequiv.hpp"

#include <algorithm>
#include <deque>
#include <cmath>
#include <limits>
#include <sstream>

namespace srf {

const char* to_string(Normalization n)
{
    return n == Normalization::per_input ? "per_input" : "per_width";
}

TheoryModel::TheoryModel(const TheorySpec& spec) : spec_(spec)
{
    if (!spec.sigma || !spec.g) throw std::invalid_argument("TheoryModel: activation and link required");
    if (spec.zeta.size() != spec.pi.size() || spec.zeta.empty())
        throw std::invalid_argument("TheoryModel: vocabulary size mismatch");
    if (!(spec.beta > 0.0) || !(spec.alpha >= 0.0)) throw std::invalid_argument("TheoryModel: need alpha >= 0, beta > 0");
    k_ = static_cast<int>(spec.zeta.size());
    rule_ = spec.outer_nodes == kOuterNodes ? outer_rule() : gauss_hermite_rule(spec.outer_nodes);
    const int m = rule_.size();
    c0.resize(m, k_);
    c1.resize(m, k_);
    r.resize(m, k_);
    gk.resize(m);
    for (int i = 0; i < m; ++i) {
        const double kap = rule_.nodes[i];
        gk[i] = spec.g->f(kap);
        for (int q = 0; q < k_; ++q) {
            const auto sm = shifted_moments(*spec.sigma, kap * spec.zeta[q]);
            c0(i, q) = sm.c0;
            c1(i, q) = sm.c1;
            r(i, q) = sm.r;
        }
    }
    const Eigen::Map<const Eigen::VectorXd> w(rule_.weights.data(), m);
    Cbar = c1.transpose() * w.asDiagonal() * c1;
    Dbar = r.transpose() * w;
    pi = Eigen::Map<const Eigen::VectorXd>(spec.pi.data(), k_);
}

TheoryModel TheoryModel::from_config(const ExperimentConfig& cfg, Normalization norm, int outer_nodes)
{
    const auto& sigma = activation(cfg.activation);
    const auto& g = link(cfg.link);
    TheorySpec spec;
    spec.sigma = &sigma;
    spec.g = &g;
    spec.zeta = spike_vocabulary(cfg, sigma, g);
    spec.pi = cfg.vocab.pi;
    spec.alpha = cfg.alpha();
    spec.beta = cfg.beta();
    spec.norm = norm;
    spec.outer_nodes = outer_nodes;
    return TheoryModel(spec);
}

double TheoryModel::sample_ratio() const
{
    return spec_.norm == Normalization::per_input ? spec_.alpha : spec_.alpha / spec_.beta;
}

FixedPointState cold_state(const TheoryModel& model, cd z, double rho1, double rho2)
{
    const int k = model.k();
    FixedPointState s;
    s.z = z;
    s.rho1 = rho1;
    s.rho2 = rho2;
    s.V = Eigen::MatrixXcd::Zero(k, k);
    s.nu = Eigen::VectorXcd::Zero(k);
    s.b.resize(k);
    for (int q = 0; q < k; ++q) s.b[q] = model.pi[q] * model.beta() / (-z);
    return s;
}

Eigen::MatrixXcd kernel_L(const Eigen::MatrixXcd& V, const Eigen::VectorXcd& b)
{
    const int k = static_cast<int>(b.size());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(k, k) + b.asDiagonal() * V;
    return V * M.partialPivLu().inverse();
}

Eigen::MatrixXcd kernel_psi(const Eigen::MatrixXcd& L, const Eigen::VectorXcd& b)
{
    Eigen::MatrixXcd psi = -(b.asDiagonal() * L * b.asDiagonal());
    psi.diagonal() += b;
    return psi;
}

namespace {

Eigen::VectorXcd chi_from(const TheoryModel& model, const Eigen::MatrixXcd& psi, const Eigen::VectorXcd& b)
{
    const Eigen::MatrixXcd C1 = model.c1.cast<cd>();
    Eigen::VectorXcd out = (C1 * psi).cwiseProduct(C1).rowwise().sum() + model.r.cast<cd>() * b;
    return out / model.beta();
}

Eigen::VectorXcd node_weights(const TheoryModel& model, const Eigen::VectorXcd& chi)
{
    const int m = model.rule().size();
    Eigen::VectorXcd w(m);
    for (int i = 0; i < m; ++i) w[i] = model.rule().weights[i] / (1.0 + chi[i]);
    return w;
}

double sup_gap(const FixedPointState& a, const FixedPointState& b)
{
    double g = (a.V - b.V).cwiseAbs().maxCoeff();
    g = std::max(g, (a.nu - b.nu).cwiseAbs().maxCoeff());
    g = std::max(g, (a.b - b.b).cwiseAbs().maxCoeff());
    return g;
}

bool finite_state(const FixedPointState& s)
{
    return s.V.allFinite() && s.nu.allFinite() && s.b.allFinite();
}

std::string dump(const FixedPointState& s)
{
    return state_to_json(s).dump();
}

} // namespace

cd chi(const TheoryModel& model, const FixedPointState& s, double kappa)
{
    const int k = model.k();
    const Eigen::MatrixXcd psi = kernel_psi(kernel_L(s.V, s.b), s.b);
    Eigen::VectorXcd c1(k);
    Eigen::VectorXcd r(k);
    for (int q = 0; q < k; ++q) {
        const auto sm = shifted_moments(*model.spec().sigma, kappa * model.spec().zeta[q]);
        c1[q] = sm.c1;
        r[q] = sm.r;
    }
    return (c1.transpose() * psi * c1)(0, 0) / model.beta() + (r.transpose() * s.b)(0, 0) / model.beta();
}

Eigen::VectorXcd chi_nodes(const TheoryModel& model, const FixedPointState& s)
{
    return chi_from(model, kernel_psi(kernel_L(s.V, s.b), s.b), s.b);
}

FixedPointState fixed_point_map(const TheoryModel& model, const FixedPointState& s)
{
    const Eigen::MatrixXcd L = kernel_L(s.V, s.b);
    const Eigen::MatrixXcd psi = kernel_psi(L, s.b);
    const Eigen::VectorXcd chi = chi_from(model, psi, s.b);
    const Eigen::VectorXcd w = node_weights(model, chi);
    const Eigen::MatrixXcd C1 = model.c1.cast<cd>();
    const double sr = model.sample_ratio();

    FixedPointState out = s;
    out.V = sr * (C1.transpose() * w.asDiagonal() * C1) + s.rho1 * model.Cbar.cast<cd>();
    out.nu = sr * (model.r.cast<cd>().transpose() * w) + s.rho2 * model.Dbar.cast<cd>();
    const Eigen::MatrixXcd Lp = kernel_L(out.V, s.b);
    for (int q = 0; q < model.k(); ++q)
        out.b[q] = model.pi[q] * model.beta() / (Lp(q, q) + out.nu[q] - s.z);
    return out;
}

double map_residual(const TheoryModel& model, const FixedPointState& s)
{
    return sup_gap(fixed_point_map(model, s), s);
}

FixedPointState iterate(const TheoryModel& model, FixedPointState x, const SolverOptions& opt)
{
    FixedPointState F = fixed_point_map(model, x);
    double res = sup_gap(F, x);
    double gamma = opt.gamma0;
    // Non-monotone acceptance: the sup-norm residual may rise briefly along a contracting path.
    std::deque<double> recent{res};
    int it = 0;
    while (res > opt.tol && it < opt.max_iter) {
        ++it;
        FixedPointState y = x;
        y.V = (1.0 - gamma) * x.V + gamma * F.V;
        y.nu = (1.0 - gamma) * x.nu + gamma * F.nu;
        y.b = (1.0 - gamma) * x.b + gamma * F.b;
        FixedPointState Fy = fixed_point_map(model, y);
        if (!finite_state(Fy)) throw FixedPointError("non-finite fixed-point iterate: " + dump(y), res);
        const double r2 = sup_gap(Fy, y);
        const double ref = *std::max_element(recent.begin(), recent.end());
        if (r2 > ref && gamma > 1e-3) {
            gamma *= 0.5;
            continue;
        }
        x = std::move(y);
        F = std::move(Fy);
        res = r2;
        recent.push_back(res);
        if (recent.size() > 10) recent.pop_front();
        if (r2 < ref) gamma = std::min(1.0, 1.5 * gamma);
    }
    x.residual = res;
    x.iterations = it;
    if (res > opt.tol) {
        std::ostringstream os;
        os << "fixed point did not converge at z=" << x.z << " (residual " << res << " after " << it << " iterations)";
        throw FixedPointError(os.str(), res);
    }
    return x;
}

bool sign_conditions_hold(const FixedPointState& s, double tol)
{
    if (s.z.imag() <= 0.0) return true;
    for (int q = 0; q < s.b.size(); ++q) {
        if (s.b[q].imag() < -tol) return false;
        if (s.nu[q].imag() > tol) return false;
    }
    for (int i = 0; i < s.V.rows(); ++i)
        for (int j = 0; j < s.V.cols(); ++j)
            if (s.V(i, j).imag() > tol) return false;
    return true;
}

FixedPointState solve_fixed_point(const TheoryModel& model, cd z, double rho1, double rho2,
                                  const FixedPointState* warm, const SolverOptions& opt)
{
    if (z.imag() < 0.0) {
        FixedPointState c = solve_fixed_point(model, std::conj(z), rho1, rho2, nullptr, opt);
        c.z = z;
        c.V = c.V.conjugate();
        c.nu = c.nu.conjugate();
        c.b = c.b.conjugate();
        return c;
    }
    if (warm) {
        FixedPointState s = *warm;
        s.z = z;
        s.rho1 = rho1;
        s.rho2 = rho2;
        try {
            s = iterate(model, s, opt);
            if (sign_conditions_hold(s)) return s;
        } catch (const FixedPointError&) {
        }
    }
    if (z.imag() >= opt.ladder_top) return iterate(model, cold_state(model, z, rho1, rho2), opt);

    const double floor = std::max(z.imag(), 1e-3 * std::max(1.0, std::abs(z.real())));
    double t = opt.ladder_top;
    FixedPointState s = iterate(model, cold_state(model, cd(z.real(), t), rho1, rho2), opt);
    while (t * opt.ladder_factor > floor) {
        t *= opt.ladder_factor;
        s.z = cd(z.real(), t);
        s = iterate(model, s, opt);
    }
    s.z = z;
    return iterate(model, s, opt);
}

cd stieltjes_from_state(const TheoryModel& model, const FixedPointState& s)
{
    const cd total = s.b.sum();
    return model.spec().norm == Normalization::per_input ? model.beta() * total : total / model.beta();
}

DerivedKernels blocks(const TheoryModel& model, const FixedPointState& s)
{
    DerivedKernels dk;
    dk.L = kernel_L(s.V, s.b);
    dk.psi = kernel_psi(dk.L, s.b);
    dk.chi = chi_from(model, dk.psi, s.b);
    const Eigen::VectorXcd w = node_weights(model, dk.chi);
    const double sr = model.sample_ratio();
    const int m = model.rule().size();
    const int k = model.k();

    Eigen::MatrixXcd iota(m, k + 1);
    iota.col(0) = model.gk.cast<cd>();
    iota.rightCols(k) = model.c0.cast<cd>();
    Eigen::VectorXcd wk(m), ws(m);
    for (int i = 0; i < m; ++i) {
        const double kap = model.rule().nodes[i];
        wk[i] = w[i] * kap;
        ws[i] = w[i] * (kap * kap - 1.0);
    }
    const Eigen::MatrixXcd C1 = model.c1.cast<cd>();
    dk.A11 = sr * (iota.transpose() * w.asDiagonal() * iota);
    dk.A21 = sr * (C1.transpose() * wk.asDiagonal() * iota);
    dk.S = sr * (C1.transpose() * ws.asDiagonal() * C1);
    return dk;
}

Eigen::MatrixXcd theta_kernel(const DerivedKernels& dk)
{
    const int k = static_cast<int>(dk.psi.rows());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(k, k) + dk.S * dk.psi;
    return dk.psi * M.partialPivLu().inverse();
}

Eigen::MatrixXcd assemble_Ge(const TheoryModel& model, const FixedPointState& s, const Eigen::VectorXd& theta,
                             const std::vector<int>& group)
{
    const int k = model.k();
    const long p = theta.size();
    if (static_cast<long>(group.size()) != p) throw std::invalid_argument("assemble_Ge: theta and groups differ in length");
    const DerivedKernels dk = blocks(model, s);
    const long N = k + 1 + p;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
    M.topLeftCorner(k + 1, k + 1) = dk.A11 - s.z * Eigen::MatrixXcd::Identity(k + 1, k + 1);
    const Eigen::MatrixXcd VS = s.V + dk.S;
    for (long j = 0; j < p; ++j) {
        const int q = group[j];
        const Eigen::RowVectorXcd row = theta[j] * dk.A21.row(q);
        M.block(k + 1 + j, 0, 1, k + 1) = row;
        M.block(0, k + 1 + j, k + 1, 1) = row.transpose();
        M(k + 1 + j, k + 1 + j) += model.pi[q] * model.beta() / s.b[q];
        for (long i = 0; i < p; ++i) M(k + 1 + i, k + 1 + j) += VS(group[i], q) * theta[i] * theta[j];
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    return lu.inverse();
}

namespace {

nlohmann::json cvec(const Eigen::VectorXcd& v)
{
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
    return out;
}

Eigen::VectorXcd vecc(const nlohmann::json& j)
{
    Eigen::VectorXcd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = cd(j[i][0].get<double>(), j[i][1].get<double>());
    return v;
}

} // namespace

nlohmann::json state_to_json(const FixedPointState& s)
{
    const int k = static_cast<int>(s.b.size());
    Eigen::VectorXcd flat(k * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) flat[i * k + j] = s.V(i, j);
    return {{"z", {s.z.real(), s.z.imag()}},
            {"rho", {s.rho1, s.rho2}},
            {"V", cvec(flat)},
            {"nu", cvec(s.nu)},
            {"b", cvec(s.b)},
            {"residual", s.residual},
            {"iterations", s.iterations}};
}

FixedPointState state_from_json(const nlohmann::json& j)
{
    FixedPointState s;
    s.z = cd(j.at("z")[0].get<double>(), j.at("z")[1].get<double>());
    s.rho1 = j.at("rho")[0].get<double>();
    s.rho2 = j.at("rho")[1].get<double>();
    s.nu = vecc(j.at("nu"));
    s.b = vecc(j.at("b"));
    const int k = static_cast<int>(s.b.size());
    const Eigen::VectorXcd flat = vecc(j.at("V"));
    if (flat.size() != k * k) throw std::invalid_argument("state_from_json: V has wrong size");
    s.V.resize(k, k);
    for (int i = 0; i < k; ++i)
        for (int jj = 0; jj < k; ++jj) s.V(i, jj) = flat[i * k + jj];
    s.residual = j.at("residual").get<double>();
    s.iterations = j.at("iterations").get<int>();
    return s;
}

} // namespace srf
