#include "srf/simulate.hpp"

#include "srf/detequiv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srf {

namespace {

void fill_normal(Eigen::MatrixXd& M, CounterRng& rng)
{
    // Row-major traversal so the layout of a row does not depend on the row count.
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rng.normal();
}

Eigen::MatrixXd map_entries(const Eigen::MatrixXd& Z, const std::function<double(double)>& f)
{
    Eigen::MatrixXd out(Z.rows(), Z.cols());
    const double* in = Z.data();
    double* o = out.data();
    const Eigen::Index n = Z.size();
    for (Eigen::Index i = 0; i < n; ++i) o[i] = f(in[i]);
    return out;
}

} // namespace

SampledData sample_data(long n, long d, const Eigen::VectorXd& w_star, const PointwiseFn& g, CounterRng& rng)
{
    if (std::abs(w_star.norm() - 1.0) > 1e-10) throw std::invalid_argument("sample_data: target must have unit norm");
    SampledData s;
    s.X.resize(n, d);
    fill_normal(s.X, rng);
    s.kappa = s.X * w_star;
    s.y = s.kappa.unaryExpr([&](double k) { return g.f(k); });
    return s;
}

Eigen::MatrixXd sample_first_layer(long p, long d, CounterRng& rng)
{
    Eigen::MatrixXd W(p, d);
    fill_normal(W, rng);
    W.rowwise().normalize();
    return W;
}

Eigen::VectorXd sample_target(long d, CounterRng& rng)
{
    Eigen::VectorXd w(d);
    for (long i = 0; i < d; ++i) w[i] = rng.normal();
    return w.normalized();
}

Eigen::MatrixXd gradient_step(const Eigen::MatrixXd& W0, const Eigen::VectorXd& a0, const Eigen::MatrixXd& X0,
                              const Eigen::VectorXd& y0, double eta, const PointwiseFn& sigma)
{
    const double p = double(W0.rows());
    const double n0 = double(X0.rows());
    if (eta == 0.0) return W0;
    const Eigen::MatrixXd Z = X0 * W0.transpose();
    const Eigen::VectorXd f = map_entries(Z, sigma.f) * a0 / std::sqrt(p);
    const Eigen::VectorXd resid = f - y0;
    Eigen::MatrixXd M = map_entries(Z, sigma.df);
    M.array().colwise() *= resid.array();
    M.array().rowwise() *= a0.transpose().array();
    const Eigen::MatrixXd G = (M.transpose() * X0) / (n0 * std::sqrt(p));
    return W0 - eta * G;
}

Eigen::VectorXd spike_vector(const Eigen::VectorXd& a0, double eta, double c1, double c1_star)
{
    return (eta * c1 * c1_star / std::sqrt(double(a0.size()))) * a0;
}

Eigen::MatrixXd spiked_approximation(const Eigen::MatrixXd& W0, const Eigen::VectorXd& a0, double eta,
                                     const Eigen::VectorXd& w_star, double c1, double c1_star)
{
    return W0 + spike_vector(a0, eta, c1, c1_star) * w_star.transpose();
}

SpikeDirection spike_direction(const Eigen::MatrixXd& X0, const Eigen::VectorXd& y0)
{
    SpikeDirection s;
    s.raw = X0.transpose() * y0 / double(X0.rows());
    const double nrm = s.raw.norm();
    s.unit = nrm > 0.0 ? Eigen::VectorXd(s.raw / nrm) : s.raw;
    return s;
}

PowerIterationResult operator_norm(const Eigen::MatrixXd& A, double tol, int max_iter)
{
    PowerIterationResult res;
    if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) {
        res.converged = true;
        return res;
    }
    CounterRng rng(0x5eed, 99);
    Eigen::VectorXd v(A.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    v.normalize();
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd w = A.transpose() * (A * v);
        const double lam = w.norm();
        if (lam == 0.0) {
            res.converged = true;
            res.iterations = it;
            return res;
        }
        v = w / lam;
        res.norm = std::sqrt(lam);
        res.iterations = it;
        if (it > 1 && std::abs(lam - prev) <= tol * lam) {
            res.converged = true;
            break;
        }
        prev = lam;
    }
    return res;
}

double spike_deviation(const Eigen::MatrixXd& W1, const Eigen::MatrixXd& W_tilde)
{
    if (W1.rows() != W_tilde.rows() || W1.cols() != W_tilde.cols())
        throw std::invalid_argument("spike_deviation: shape mismatch");
    const auto r = operator_norm(W1 - W_tilde);
    if (!r.converged) throw std::runtime_error("spike_deviation: power iteration did not converge");
    return r.norm;
}

Eigen::MatrixXd features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X, const PointwiseFn& sigma)
{
    return map_entries(X * W.transpose(), sigma.f);
}

ExtendedFeatureMatrix extended_features(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                        const std::vector<long>& offsets, const Eigen::VectorXd& kappa)
{
    const long n = Phi.rows(), p = Phi.cols();
    const int k = static_cast<int>(offsets.size()) - 1;
    if (k < 1 || offsets.front() != 0 || offsets.back() != p) throw std::invalid_argument("extended_features: groups do not partition the neurons");
    ExtendedFeatureMatrix e;
    e.Phi = Phi;
    e.y = y;
    e.kappa = kappa;
    e.mean.resize(n, k);
    e.centered.resize(n, p);
    for (int q = 0; q < k; ++q) {
        const long len = offsets[q + 1] - offsets[q];
        if (len <= 0) throw std::invalid_argument("extended_features: empty group " + std::to_string(q));
        const auto block = Phi.middleCols(offsets[q], len);
        e.mean.col(q) = block.rowwise().mean();
        e.centered.middleCols(offsets[q], len) = block.colwise() - e.mean.col(q);
    }
    e.Phi_e.resize(n, 1 + k + p);
    e.Phi_e.col(0) = y;
    e.Phi_e.middleCols(1, k) = e.mean;
    e.Phi_e.rightCols(p) = e.centered;
    return e;
}

namespace {

Eigen::VectorXd spd_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b)
{
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        const auto D = ldlt.vectorD();
        throw std::runtime_error("ridge_fit: normal equations not positive definite (pivot range " +
                                 std::to_string(D.minCoeff()) + " .. " + std::to_string(D.maxCoeff()) + ")");
    }
    return ldlt.solve(b);
}

} // namespace

Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda, RidgePath path)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("ridge_fit: lambda must be > 0");
    const long n = Phi.rows(), p = Phi.cols();
    const double sp = std::sqrt(double(p));
    if (path == RidgePath::automatic) path = p <= n ? RidgePath::primal : RidgePath::dual;
    if (path == RidgePath::primal) {
        Eigen::MatrixXd A(p, p);
        A.setZero();
        A.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose(), 1.0 / double(p));
        A = A.selfadjointView<Eigen::Lower>();
        A.diagonal().array() += lambda;
        return spd_solve(A, Phi.transpose() * y / sp);
    }
    Eigen::MatrixXd B(n, n);
    B.setZero();
    B.selfadjointView<Eigen::Lower>().rankUpdate(Phi, 1.0 / double(p));
    B = B.selfadjointView<Eigen::Lower>();
    B.diagonal().array() += lambda;
    return Phi.transpose() * spd_solve(B, y) / sp;
}

double ridge_gradient_norm(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda, const Eigen::VectorXd& a)
{
    const double sp = std::sqrt(double(Phi.cols()));
    const Eigen::VectorXd r = y - Phi * a / sp;
    return (-2.0 * Phi.transpose() * r / sp + 2.0 * lambda * a).norm();
}

McEstimate empirical_generror(const Eigen::VectorXd& a_hat, const Eigen::MatrixXd& W, const PointwiseFn& sigma,
                              const PointwiseFn& g, const Eigen::VectorXd& w_star, long n_test, CounterRng& rng,
                              long batch)
{
    if (n_test < 1) throw std::invalid_argument("empirical_generror: n_test must be positive");
    const long d = W.cols();
    const double sp = std::sqrt(double(W.rows()));
    double sum = 0.0, sum2 = 0.0;
    long done = 0;
    while (done < n_test) {
        const long m = std::min(batch, n_test - done);
        const SampledData s = sample_data(m, d, w_star, g, rng);
        const Eigen::VectorXd f = features(W, s.X, sigma) * a_hat / sp;
        const Eigen::ArrayXd e2 = (s.y - f).array().square();
        sum += e2.sum();
        sum2 += e2.square().sum();
        done += m;
    }
    McEstimate est;
    est.samples = n_test;
    est.mean = sum / double(n_test);
    const double var = std::max(0.0, sum2 / double(n_test) - est.mean * est.mean) * double(n_test) / std::max(1.0, double(n_test - 1));
    est.stderr_ = std::sqrt(var / double(n_test));
    return est;
}

TauSet empirical_tau(const Eigen::VectorXd& a_hat, const std::vector<long>& offsets, const Eigen::VectorXd& theta,
                     const Eigen::MatrixXd& W, const Eigen::MatrixXd& Cbar, const Eigen::VectorXd& Dbar)
{
    const int k = static_cast<int>(offsets.size()) - 1;
    const long p = a_hat.size();
    const double sp = std::sqrt(double(p));
    TauSet t;
    t.provenance = TauSet::Provenance::empirical;
    t.tau0.resize(k);
    t.tau1.resize(k);
    Eigen::MatrixXd H(W.cols(), k);
    double tau3 = 0.0;
    for (int q = 0; q < k; ++q) {
        const long o = offsets[q], len = offsets[q + 1] - offsets[q];
        const auto a = a_hat.segment(o, len);
        t.tau0[q] = a.sum() / sp;
        t.tau1[q] = a.dot(theta.segment(o, len)) / sp;
        H.col(q) = W.middleRows(o, len).transpose() * a;
        tau3 += Dbar[q] * a.squaredNorm();
    }
    const Eigen::MatrixXd HtH = H.transpose() * H;
    t.tau2 = (Cbar.cwiseProduct(HtH)).sum() / double(p);
    t.tau3 = tau3 / double(p);
    return t;
}

Eigen::VectorXd bulk_spectrum(const Eigen::MatrixXd& centered)
{
    const long n = centered.rows(), p = centered.cols();
    Eigen::MatrixXd G;
    if (n < p) {
        G.setZero(n, n);
        G.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / double(p));
    } else {
        G.setZero(p, p);
        G.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / double(p));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("bulk_spectrum: eigensolver failed");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
    const Eigen::VectorXd& ev = es.eigenvalues();
    out.tail(ev.size()) = ev.cwiseMax(0.0);
    std::sort(out.data(), out.data() + out.size());
    return out;
}

std::complex<double> empirical_stieltjes(const Eigen::VectorXd& eigs, std::complex<double> z)
{
    std::complex<double> s = 0.0;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) s += 1.0 / (eigs[i] - z);
    return s / double(eigs.size());
}

TraceOperator TraceOperator::unit_mass(long dim, long index)
{
    TraceOperator A;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[index] = 1.0;
    A.terms.emplace_back(e, e);
    return A;
}

TraceOperator TraceOperator::normalized_trace(long dim)
{
    TraceOperator A;
    A.identity_scale = 1.0 / double(dim);
    return A;
}

ResolventSpectrum::ResolventSpectrum(const Eigen::MatrixXd& Phi_e, long p)
{
    const long N = Phi_e.cols();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
    G.selfadjointView<Eigen::Lower>().rankUpdate(Phi_e.transpose(), 1.0 / double(p));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.info() != Eigen::Success) throw std::runtime_error("ResolventSpectrum: eigensolver failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
}

std::complex<double> ResolventSpectrum::trace(const TraceOperator& A, std::complex<double> z) const
{
    const Eigen::VectorXcd r = (evals_.cast<std::complex<double>>().array() - z).inverse().matrix();
    std::complex<double> out = A.identity_scale == 0.0 ? std::complex<double>(0.0) : A.identity_scale * r.sum();
    for (const auto& [u, v] : A.terms) {
        if (u.size() != dim() || v.size() != dim()) throw std::invalid_argument("ResolventSpectrum::trace: term dimension mismatch");
        const Eigen::VectorXd qu = evecs_.transpose() * u;
        const Eigen::VectorXd qv = evecs_.transpose() * v;
        out += (qv.cast<std::complex<double>>().array() * r.array() * qu.cast<std::complex<double>>().array()).sum();
    }
    return out;
}

std::complex<double> extended_resolvent_trace(const Eigen::MatrixXd& Phi_e, const TraceOperator& A, std::complex<double> z,
                                              long p)
{
    return ResolventSpectrum(Phi_e, p).trace(A, z);
}

CovarianceDiagnostic bulk_covariance_diagnostic(const Eigen::MatrixXd& W0, const Eigen::VectorXd& a0,
                                                const Eigen::MatrixXd& X0, const Eigen::VectorXd& y0, double eta,
                                                const PointwiseFn& sigma, const PointwiseFn& g)
{
    if (!is_odd(sigma)) throw std::invalid_argument("bulk_covariance_diagnostic: activation must be odd");
    const double p = double(W0.rows()), d = double(W0.cols()), n0 = double(X0.rows());
    const double abar = std::abs(a0[0]) * std::sqrt(p);
    if ((a0.array().abs() * std::sqrt(p) - abar).abs().maxCoeff() > 1e-12)
        throw std::invalid_argument("bulk_covariance_diagnostic: second layer must be uniform");
    const double c1 = first_hermite(sigma), c1s = first_hermite(g);
    const Eigen::MatrixXd W1 = gradient_step(W0, a0, X0, y0, eta, sigma);
    CovarianceDiagnostic r;
    if (c1s == 0.0) throw std::invalid_argument("bulk_covariance_diagnostic: link has no linear component");
    // u v^T removes exactly the linear part of the step: v = X0^T (y0 - f0) / (n0 c1*).
    const Eigen::VectorXd f0 = features(W0, X0, sigma) * a0 / std::sqrt(p);
    const Eigen::VectorXd v = X0.transpose() * (y0 - f0) / (n0 * c1s);
    const Eigen::VectorXd u = spike_vector(a0, eta, c1, c1s);
    const Eigen::MatrixXd B = W1 - u * v.transpose();
    r.empirical = B.rowwise().squaredNorm().mean();
    const double eta_t = eta / d, beta = p / d, alpha0 = n0 / d;
    const double sd2 = derivative_second_moment(sigma) - c1 * c1;
    r.predicted = 1.0 + sd2 * std::pow(eta_t * abar / beta, 2) * second_moment(g) / alpha0;
    r.gap = std::abs(r.empirical - r.predicted) / r.predicted;
    return r;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt)
{
    const auto rep = validate_config(cfg);
    if (!rep.ok()) throw ConfigError(rep.str());
    const PointwiseFn& sigma = activation(cfg.activation);
    const PointwiseFn& g = link(cfg.link);
    RunResult res;
    res.config = cfg;
    CounterRng rw(cfg.seed, kStreamW0), ra(cfg.seed, kStreamA0), rt(cfg.seed, kStreamTarget);
    CounterRng rx0(cfg.seed, kStreamX0), rx(cfg.seed, kStreamX), rtest(cfg.seed, kStreamTest);
    res.W0 = sample_first_layer(cfg.p, cfg.d, rw);
    res.layer = sample_second_layer(cfg.p, cfg.vocab, ra);
    res.w_star = sample_target(cfg.d, rt);
    const double c1 = first_hermite(sigma), c1s = first_hermite(g);
    res.u = spike_vector(res.layer.a0, cfg.eta(), c1, c1s);
    res.theta = res.W0 * res.w_star;
    const Eigen::MatrixXd W_tilde = res.W0 + res.u * res.w_star.transpose();
    if (opt.weights == WeightModel::gradient_step) {
        const SampledData s0 = sample_data(cfg.n0, cfg.d, res.w_star, g, rx0);
        res.W1 = gradient_step(res.W0, res.layer.a0, s0.X, s0.y, cfg.eta(), sigma);
        if (opt.compute_deviation) res.spike_deviation = spike_deviation(res.W1, W_tilde);
    } else {
        res.W1 = W_tilde;
    }
    const SampledData s = sample_data(cfg.n, cfg.d, res.w_star, g, rx);
    const Eigen::MatrixXd Phi = features(res.W1, s.X, sigma);
    res.a_hat = ridge_fit(Phi, s.y, cfg.lambda);
    if (opt.compute_spectrum || opt.keep_features) {
        ExtendedFeatureMatrix ext = extended_features(Phi, s.y, res.layer.offsets, s.kappa);
        if (opt.compute_spectrum) res.eigenvalues = bulk_spectrum(ext.centered);
        if (opt.keep_features) res.features = std::move(ext);
    }
    const TheoryModel tm = TheoryModel::from_config(cfg);
    res.tau = empirical_tau(res.a_hat, res.layer.offsets, res.theta, res.W0, tm.Cbar, tm.Dbar);
    res.gen_error = empirical_generror(res.a_hat, res.W1, sigma, g, res.w_star, opt.n_test, rtest);
    return res;
}

} // namespace srf
