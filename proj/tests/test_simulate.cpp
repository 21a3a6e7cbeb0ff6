#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srf/detequiv.hpp"
#include "srf/functions.hpp"
#include "srf/model.hpp"
#include "srf/quadrature.hpp"
#include "srf/simulate.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>

using namespace srf;

namespace {

Eigen::MatrixXd gaussian(long r, long c, std::uint64_t seed)
{
    CounterRng rng(seed, 77);
    Eigen::MatrixXd M(r, c);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < c; ++j) M(i, j) = rng.normal();
    return M;
}

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.d = 60;
    c.p = 90;
    c.n = 120;
    c.n0 = default_n0(c.d);
    c.eta_tilde = 1.0;
    c.lambda = 0.1;
    c.seed = 17;
    c.activation = "tanh";
    c.link = "sin";
    c.vocab = {{1.0, -1.0}, {0.6, 0.4}};
    return c;
}

} // namespace

TEST_CASE("sample_data examples")
{
    CounterRng r0(1, kStreamTarget);
    const auto w = sample_target(40, r0);
    CHECK(std::abs(w.norm() - 1.0) < 1e-14);

    CounterRng r1(1, kStreamX);
    const auto s = sample_data(50, 40, w, link("identity"), r1);
    CHECK((s.y - s.kappa).norm() == 0.0);

    CounterRng r2(2, kStreamX);
    const long n = 100000;
    const auto big = sample_data(n, 5, Eigen::VectorXd::Unit(5, 0), link("sin"), r2);
    const double mean = big.kappa.mean();
    const double var = (big.kappa.array() - mean).square().sum() / double(n - 1);
    CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 0.05);

    CounterRng a(3, kStreamX), b(3, kStreamX);
    const auto s1 = sample_data(30, 10, Eigen::VectorXd::Unit(10, 2), link("tanh"), a);
    const auto s2 = sample_data(30, 10, Eigen::VectorXd::Unit(10, 2), link("tanh"), b);
    CHECK((s1.X - s2.X).norm() == 0.0);
    CHECK((s1.y - s2.y).norm() == 0.0);

    CounterRng c(3, kStreamX);
    CHECK_THROWS(sample_data(3, 10, Eigen::VectorXd::Ones(10), link("tanh"), c));
}

TEST_CASE("first layer rows are unit norm")
{
    CounterRng rng(5, kStreamW0);
    const auto W = sample_first_layer(50, 30, rng);
    for (long j = 0; j < 50; ++j) CHECK(std::abs(W.row(j).norm() - 1.0) < 1e-12);
}

TEST_CASE("gradient_step trivial cases")
{
    CounterRng rw(1, kStreamW0), rx(1, kStreamX0);
    const auto W0 = sample_first_layer(6, 4, rw);
    const Eigen::VectorXd w = Eigen::VectorXd::Unit(4, 0);
    const auto s = sample_data(5, 4, w, link("sin"), rx);
    const Eigen::VectorXd a0 = Eigen::VectorXd::Constant(6, 0.4);
    CHECK((gradient_step(W0, a0, s.X, s.y, 0.0, activation("tanh")) - W0).norm() == 0.0);
    CHECK((gradient_step(W0, Eigen::VectorXd::Zero(6), s.X, s.y, 3.0, activation("tanh")) - W0).norm() == 0.0);
}

TEST_CASE("gradient_step matches a scalar-loop oracle")
{
    const long p = 2, d = 3, n0 = 2;
    Eigen::MatrixXd W0(p, d);
    W0 << 0.6, 0.0, 0.8, 0.0, 1.0, 0.0;
    Eigen::VectorXd a0(p);
    a0 << 0.7, -0.3;
    Eigen::MatrixXd X0(n0, d);
    X0 << 0.5, -1.2, 0.3, 1.1, 0.4, -0.9;
    Eigen::VectorXd y0(n0);
    y0 << 0.2, -0.6;
    const double eta = 2.5;
    const auto& s = activation("tanh");

    Eigen::MatrixXd W1 = W0;
    for (long j = 0; j < p; ++j)
        for (long i = 0; i < d; ++i) {
            double g = 0.0;
            for (long mu = 0; mu < n0; ++mu) {
                double f = 0.0;
                for (long l = 0; l < p; ++l) {
                    double pre = 0.0;
                    for (long t = 0; t < d; ++t) pre += W0(l, t) * X0(mu, t);
                    f += a0[l] * std::tanh(pre);
                }
                f /= std::sqrt(double(p));
                double pre = 0.0;
                for (long t = 0; t < d; ++t) pre += W0(j, t) * X0(mu, t);
                const double ds = 1.0 - std::tanh(pre) * std::tanh(pre);
                g += (f - y0[mu]) * a0[j] * X0(mu, i) * ds;
            }
            W1(j, i) -= eta * g / (double(n0) * std::sqrt(double(p)));
        }
    CHECK((gradient_step(W0, a0, X0, y0, eta, s) - W1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spiked_approximation examples")
{
    CounterRng rw(2, kStreamW0), ra(2, kStreamA0), rt(2, kStreamTarget);
    const long p = 40, d = 30;
    const auto W0 = sample_first_layer(p, d, rw);
    const auto layer = sample_second_layer(p, {{1.0, -2.0}, {0.5, 0.5}}, ra);
    const auto w = sample_target(d, rt);

    const auto& h2 = activation("h2");
    const double c1_h2 = first_hermite(h2);
    CHECK(std::abs(c1_h2) < 1e-14);
    CHECK((spiked_approximation(W0, layer.a0, 5.0, w, c1_h2, first_hermite(link("sin"))) - W0).norm() < 1e-12);

    const double eta = 7.0;
    const Eigen::VectorXd u = spike_vector(layer.a0, eta, first_hermite(activation("identity")),
                                           first_hermite(link("identity")));
    CHECK((u - eta * layer.a0 / std::sqrt(double(p))).norm() < 1e-14);
}

TEST_CASE("spike size is order one relative to W0 at the spectrum configuration")
{
    // ||u||_F / ||W0||_F = eta_tilde c1 c1* |zeta| / beta, independent of d.
    const auto& s = activation("relu");
    const auto& g = link("sin");
    const double c1 = first_hermite(s), c1s = first_hermite(g);
    const double expect = 3.3 * c1 * c1s / 1.5;
    for (long d : {200, 800}) {
        const long p = d * 3 / 2;
        CounterRng rw(3, kStreamW0), ra(3, kStreamA0);
        const auto W0 = sample_first_layer(p, d, rw);
        const auto layer = sample_second_layer(p, {{1.0}, {1.0}}, ra);
        const Eigen::VectorXd u = spike_vector(layer.a0, 3.3 * d, c1, c1s);
        const double ratio = u.norm() / W0.norm();
        CHECK(std::isfinite(ratio));
        CHECK(ratio == doctest::Approx(expect).epsilon(1e-10));
        CHECK(ratio > 0.1);
        CHECK(ratio < 10.0);
    }
}

TEST_CASE("spike_deviation and operator_norm")
{
    const auto W = gaussian(20, 15, 1);
    CHECK(spike_deviation(W, W) == 0.0);
    const Eigen::VectorXd r = gaussian(20, 1, 2).col(0), s = gaussian(15, 1, 3).col(0);
    const Eigen::MatrixXd D = r * s.transpose();
    CHECK(std::abs(spike_deviation(W + D, W) - r.norm() * s.norm()) < 1e-8 * r.norm() * s.norm());

    const auto A = gaussian(60, 40, 4);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto pi = operator_norm(A);
    CHECK(pi.converged);
    CHECK(std::abs(pi.norm - svd.singularValues()[0]) < 1e-4 * svd.singularValues()[0]);
    CHECK_THROWS(spike_deviation(W, gaussian(20, 14, 5)));
}

TEST_CASE("spike direction exposes raw and unit forms")
{
    CounterRng rx(4, kStreamX0);
    const auto s = sample_data(500, 20, Eigen::VectorXd::Unit(20, 0), link("sin"), rx);
    const auto v = spike_direction(s.X, s.y);
    CHECK((v.raw - s.X.transpose() * s.y / 500.0).norm() < 1e-12);
    CHECK(std::abs(v.unit.norm() - 1.0) < 1e-12);
    // The raw direction points along w* with length close to c1*.
    CHECK(v.raw[0] == doctest::Approx(first_hermite(link("sin"))).epsilon(0.2));
}

TEST_CASE("extended features: centering, ordering and invariances")
{
    const long n = 7, p = 9;
    const auto Phi = gaussian(n, p, 6);
    const Eigen::VectorXd y = gaussian(n, 1, 7).col(0);
    const std::vector<long> offsets{0, 4, 9};
    const auto e = extended_features(Phi, y, offsets);
    REQUIRE(e.Phi_e.cols() == 1 + 2 + p);
    CHECK((e.Phi_e.col(0) - y).norm() == 0.0);
    for (int q = 0; q < 2; ++q) {
        const auto blk = e.centered.middleCols(offsets[q], offsets[q + 1] - offsets[q]);
        CHECK(blk.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
        CHECK((e.Phi_e.col(1 + q) - Phi.middleCols(offsets[q], offsets[q + 1] - offsets[q]).rowwise().mean()).norm() <
              1e-14);
    }

    const auto c = extended_features(Eigen::MatrixXd::Constant(n, p, 2.5), y, offsets);
    CHECK(c.centered.norm() < 1e-14);

    // Swapping two neurons inside group 1 permutes the centered block the same way and keeps the means.
    Eigen::MatrixXd Pp = Phi;
    Pp.col(5).swap(Pp.col(7));
    const auto ep = extended_features(Pp, y, offsets);
    CHECK((ep.mean - e.mean).norm() < 1e-14);
    Eigen::MatrixXd back = ep.centered;
    back.col(5).swap(back.col(7));
    CHECK((back - e.centered).norm() < 1e-14);

    CHECK_THROWS(extended_features(Phi, y, {0, 0, 9}));
    CHECK_THROWS(extended_features(Phi, y, {0, 4, 8}));
}

TEST_CASE("group means approach c0(kappa, u) as the width grows")
{
    // Spiked weights, tanh: mean_j tanh(w_j.x + u kappa) -> E_z tanh(z + u kappa) up to O(1/sqrt(d)).
    const auto& s = activation("tanh");
    const auto& g = link("sin");
    double prev = 1e9;
    for (long d : {100, 400, 1600}) {
        const long p = d, n = 200;
        CounterRng rw(8, kStreamW0), rt(8, kStreamTarget), rx(8, kStreamX);
        const auto W0 = sample_first_layer(p, d, rw);
        const auto w = sample_target(d, rt);
        const Eigen::VectorXd a0 = Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(double(p)));
        const double c1 = first_hermite(s), c1s = first_hermite(g);
        const auto Wt = spiked_approximation(W0, a0, 1.0 * d, w, c1, c1s);
        const auto data = sample_data(n, d, w, g, rx);
        const auto e = extended_features(features(Wt, data.X, s), data.y, {0, p});
        const double u = c1 * c1s;   // eta_tilde = beta = 1, zeta = 1
        double err2 = 0.0;
        for (long mu = 0; mu < n; ++mu) {
            const double ref = shifted_hermite_coeff(s, 0, data.kappa[mu], u);
            err2 += std::pow(e.mean(mu, 0) - ref, 2);
        }
        const double rms = std::sqrt(err2 / n);
        CHECK(rms * std::sqrt(double(d)) < 3.0);
        CHECK(rms < prev);
        prev = rms;
    }
}

TEST_CASE("ridge_fit examples")
{
    // 3 x 2 hand system against the explicit 2 x 2 normal-equation inverse.
    Eigen::MatrixXd Phi(3, 2);
    Phi << 1.0, 2.0, -0.5, 0.3, 0.7, -1.1;
    Eigen::Vector3d y(0.4, -0.2, 1.3);
    const double lam = 0.3, sp = std::sqrt(2.0);
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    for (int i = 0; i < 3; ++i) {
        a11 += Phi(i, 0) * Phi(i, 0) / 2.0;
        a12 += Phi(i, 0) * Phi(i, 1) / 2.0;
        a22 += Phi(i, 1) * Phi(i, 1) / 2.0;
        b1 += Phi(i, 0) * y[i] / sp;
        b2 += Phi(i, 1) * y[i] / sp;
    }
    a11 += lam;
    a22 += lam;
    const double det = a11 * a22 - a12 * a12;
    const Eigen::Vector2d oracle((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
    CHECK((ridge_fit(Phi, y, lam, RidgePath::primal) - oracle).norm() < 1e-12);
    CHECK((ridge_fit(Phi, y, lam, RidgePath::dual) - oracle).norm() < 1e-12);

    const auto Big = gaussian(50, 10, 9);
    const Eigen::VectorXd yb = gaussian(50, 1, 10).col(0);
    const auto heavy = ridge_fit(Big, yb, 1e8);
    CHECK(heavy.norm() < 1e-6);
    CHECK((Big * heavy).norm() / std::sqrt(10.0) < 1e-5);

    const Eigen::VectorXd ls = (Big / std::sqrt(10.0)).colPivHouseholderQr().solve(yb);
    CHECK((ridge_fit(Big, yb, 1e-10) - ls).norm() < 1e-6);

    CHECK_THROWS(ridge_fit(Big, yb, 0.0));
}

TEST_CASE("ridge primal and dual agree and satisfy optimality")
{
    const auto Phi = gaussian(200, 300, 11);
    const Eigen::VectorXd y = gaussian(200, 1, 12).col(0);
    const auto ap = ridge_fit(Phi, y, 0.05, RidgePath::primal);
    const auto ad = ridge_fit(Phi, y, 0.05, RidgePath::dual);
    CHECK((ap - ad).norm() < 1e-8);
    CHECK(ridge_gradient_norm(Phi, y, 0.05, ap) < 1e-8 * (1.0 + ap.norm()));
    CHECK(ridge_gradient_norm(Phi, y, 0.05, ad) < 1e-8 * (1.0 + ad.norm()));
}

TEST_CASE("empirical_generror examples")
{
    const long p = 30, d = 20;
    CounterRng rw(1, kStreamW0), rt(1, kStreamTarget);
    const auto W = sample_first_layer(p, d, rw);
    const auto w = sample_target(d, rt);
    const auto& sig = activation("tanh");
    const auto& g = link("sin");

    CounterRng r1(1, kStreamTest);
    const auto null = empirical_generror(Eigen::VectorXd::Zero(p), W, sig, g, w, 40000, r1);
    const double exact = (1.0 - std::exp(-2.0)) / 2.0;
    const double quad = outer_rule().expect([](double k) { return std::sin(k) * std::sin(k); });
    CHECK(std::abs(quad - exact) < 1e-12);
    CHECK(std::abs(null.mean - exact) < 3.0 * null.stderr_);

    CounterRng r2(2, kStreamTest), r3(2, kStreamTest);
    const auto e1 = empirical_generror(Eigen::VectorXd::Zero(p), W, sig, g, w, 10000, r2);
    const auto e2 = empirical_generror(Eigen::VectorXd::Zero(p), W, sig, g, w, 20000, r3);
    // Doubling the sample divides the standard error by sqrt(2).
    CHECK(e1.stderr_ / e2.stderr_ == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
}

TEST_CASE("realizable linear case reaches zero test error")
{
    ExperimentConfig c;
    c.d = 40;
    c.p = 80;
    c.n = 400;
    c.n0 = default_n0(c.d);
    c.eta_tilde = 0.0;
    c.lambda = 1e-8;
    c.seed = 3;
    c.activation = "identity";
    c.link = "identity";
    RunOptions opt;
    opt.compute_spectrum = false;
    opt.n_test = 10000;
    const auto r = run_experiment(c, opt);
    CHECK(r.gen_error.mean < 1e-6);
}

TEST_CASE("empirical_tau examples")
{
    const long p = 12, d = 5;
    const std::vector<long> offsets{0, 5, 12};
    const auto W = gaussian(p, d, 13);
    const Eigen::VectorXd theta = gaussian(p, 1, 14).col(0);
    Eigen::MatrixXd C(2, 2);
    C << 0.4, 0.1, 0.1, 0.3;
    const Eigen::Vector2d D(0.2, 0.5);

    const auto zero = empirical_tau(Eigen::VectorXd::Zero(p), offsets, theta, W, C, D);
    CHECK(zero.tau0.norm() == 0.0);
    CHECK(zero.tau1.norm() == 0.0);
    CHECK(zero.tau2 == 0.0);
    CHECK(zero.tau3 == 0.0);

    // A readout that averages group 1 with unit weight: tau0 = (1, 0).
    Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
    a.head(5).setConstant(std::sqrt(double(p)) / 5.0);
    const auto t = empirical_tau(a, offsets, theta, W, C, D);
    CHECK(std::abs(t.tau0[0] - 1.0) < 1e-14);
    CHECK(std::abs(t.tau0[1]) < 1e-14);

    // Double-loop oracle for tau2 and tau3.
    const Eigen::VectorXd r = gaussian(p, 1, 15).col(0);
    const auto tr = empirical_tau(r, offsets, theta, W, C, D);
    auto grp = [&](long j) { return j < 5 ? 0 : 1; };
    double t2 = 0.0, t3 = 0.0;
    for (long i = 0; i < p; ++i) {
        t3 += D[grp(i)] * r[i] * r[i];
        for (long j = 0; j < p; ++j) t2 += r[i] * r[j] * C(grp(i), grp(j)) * W.row(i).dot(W.row(j));
    }
    CHECK(std::abs(tr.tau2 - t2 / p) < 1e-10);
    CHECK(std::abs(tr.tau3 - t3 / p) < 1e-10);
    CHECK(tr.tau2 >= -1e-8);

    const std::vector<long> one{0, p};
    Eigen::MatrixXd C1(1, 1);
    C1 << 0.37;
    const auto t1 = empirical_tau(r, one, theta, W, C1, Eigen::VectorXd::Constant(1, 0.2));
    double o = 0.0;
    for (long i = 0; i < p; ++i)
        for (long j = 0; j < p; ++j) o += r[i] * r[j] * 0.37 * W.row(i).dot(W.row(j));
    CHECK(std::abs(t1.tau2 - o / p) < 1e-10);
    CHECK(std::abs(t1.tau1[0] - r.dot(theta) / std::sqrt(double(p))) < 1e-12);
}

TEST_CASE("bulk_spectrum and empirical_stieltjes")
{
    const auto zero = bulk_spectrum(Eigen::MatrixXd::Zero(10, 15));
    CHECK(zero.size() == 15);
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
    const std::complex<double> z(-0.3, 0.2);
    CHECK(std::abs(empirical_stieltjes(zero, z) + 1.0 / z) < 1e-14);

    const auto M = gaussian(40, 25, 16);
    const auto ev = bulk_spectrum(M);
    for (double t : {10.0, 100.0, 1000.0}) {
        const std::complex<double> zt(0.0, t);
        CHECK(std::abs(empirical_stieltjes(ev, zt) * (-zt) - 1.0) < 1.0 * ev.maxCoeff() / t + 1e-12);
    }
    // Both Gram sides give the same nonzero eigenvalues.
    const auto ev_t = bulk_spectrum(M.transpose());
    CHECK(std::abs(ev.tail(25).sum() * 25.0 - ev_t.tail(25).sum() * 40.0) < 1e-9);
}

TEST_CASE("centering removes the order-d mean outlier")
{
    const long d = 200, p = 300, n = 240;
    CounterRng rw(5, kStreamW0), rt(5, kStreamTarget), rx(5, kStreamX);
    const auto W = sample_first_layer(p, d, rw);
    const auto w = sample_target(d, rt);
    const auto data = sample_data(n, d, w, link("sin"), rx);
    const auto Wt = spiked_approximation(W, Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(double(p))), 3.3 * d, w,
                                         first_hermite(activation("relu")), first_hermite(link("sin")));
    const auto Phi = features(Wt, data.X, activation("relu"));
    const auto e = extended_features(Phi, data.y, {0, p});
    const auto raw = bulk_spectrum(Phi);
    const auto bulk = bulk_spectrum(e.centered);
    CHECK(raw.maxCoeff() > 0.1 * n);
    CHECK(bulk.maxCoeff() < 20.0);
}

TEST_CASE("extended_resolvent_trace examples")
{
    const long p = 64, n = 50, k = 2;
    const long N = 1 + k + p;
    const std::complex<double> z(-0.5, 0.1);
    CHECK(std::abs(extended_resolvent_trace(Eigen::MatrixXd::Zero(n, N), TraceOperator::normalized_trace(N), z, p) +
                   1.0 / z) < 1e-14);

    const auto Phi_e = gaussian(n, N, 17);
    const Eigen::MatrixXcd G =
        (Eigen::MatrixXcd(Phi_e.transpose() * Phi_e / double(p)) - z * Eigen::MatrixXcd::Identity(N, N)).inverse();
    const auto label = extended_resolvent_trace(Phi_e, TraceOperator::unit_mass(N, 0), z, p);
    CHECK(std::abs(label - G(0, 0)) < 1e-10);
    const auto mean = extended_resolvent_trace(Phi_e, TraceOperator::unit_mass(N, 1), z, p);
    CHECK(std::abs(mean - G(1, 1)) < 1e-10);
    const auto tr = extended_resolvent_trace(Phi_e, TraceOperator::normalized_trace(N), z, p);
    CHECK(std::abs(tr - G.trace() / double(N)) < 1e-10);
    const auto conj = extended_resolvent_trace(Phi_e, TraceOperator::unit_mass(N, 0), std::conj(z), p);
    CHECK(std::abs(conj - std::conj(label)) < 1e-12);
}

TEST_CASE("bulk_covariance_diagnostic trivial cases and preconditions")
{
    const long p = 64, d = 64, n0 = 256;
    CounterRng rw(6, kStreamW0), rt(6, kStreamTarget), rx(6, kStreamX0);
    const auto W0 = sample_first_layer(p, d, rw);
    const auto w = sample_target(d, rt);
    const auto s = sample_data(n0, d, w, link("sin"), rx);
    const Eigen::VectorXd a0 = Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(double(p)));

    const auto still = bulk_covariance_diagnostic(W0, a0, s.X, s.y, 0.0, activation("tanh"), link("sin"));
    CHECK(std::abs(still.empirical - 1.0) < 1e-12);
    CHECK(still.predicted == 1.0);
    CHECK(still.gap < 1e-12);

    const auto lin = bulk_covariance_diagnostic(W0, a0, s.X, s.y, 2.0 * d, activation("identity"), link("sin"));
    CHECK(std::abs(lin.empirical - 1.0) < 1e-10);
    CHECK(std::abs(lin.predicted - 1.0) < 1e-12);

    CHECK_THROWS(bulk_covariance_diagnostic(W0, a0, s.X, s.y, 1.0 * d, activation("relu"), link("sin")));
    Eigen::VectorXd mixed = a0;
    mixed[0] *= 2.0;
    CHECK_THROWS(bulk_covariance_diagnostic(W0, mixed, s.X, s.y, 1.0 * d, activation("tanh"), link("sin")));
}

TEST_CASE("run_experiment is deterministic in the seed")
{
    RunOptions opt;
    opt.n_test = 10000;
    const auto c = small_config();
    const auto a = run_experiment(c, opt);
    const auto b = run_experiment(c, opt);
    CHECK((a.W1 - b.W1).norm() == 0.0);
    CHECK((a.a_hat - b.a_hat).norm() == 0.0);
    CHECK((a.eigenvalues - b.eigenvalues).norm() == 0.0);
    CHECK(a.gen_error.mean == b.gen_error.mean);
    CHECK(a.spike_deviation == b.spike_deviation);

    auto c2 = c;
    c2.seed += 1;
    CHECK(run_experiment(c2, opt).gen_error.mean != a.gen_error.mean);

    opt.weights = WeightModel::spiked;
    const auto sp = run_experiment(c, opt);
    CHECK((sp.W1 - (sp.W0 + sp.u * sp.w_star.transpose())).norm() < 1e-12);
    CHECK((sp.W0 - a.W0).norm() == 0.0);
}
