#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srf/functions.hpp"
#include "srf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

using namespace srf;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Adaptive Simpson, independent of the Gauss-Hermite machinery.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12)
{
    // Unit panels so that a localized integrand cannot fool the first estimate.
    const int panels = std::max(1, int(std::ceil(b - a)));
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * h, hi = lo + h;
        const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
        acc += simpson(f, lo, hi, fa, fm, fb, h / 6.0 * (fa + 4.0 * fm + fb), tol, 30);
    }
    return acc;
}

// Closed-form Hermite coefficients of erf: erf(x) = 2 Phi(sqrt(2) x) - 1 and Stein's lemma give
// c_l = 2 * 2^{l/2} / sqrt(l!) * (-1/3)^{(l-1)/2} (l-2)!! / sqrt(6 pi) for odd l, 0 for even l.
double erf_coeff(int l)
{
    if (l % 2 == 0) return 0.0;
    double v = 2.0 / std::sqrt(6.0 * M_PI);
    for (int j = 1; j <= l; ++j) v *= std::sqrt(2.0 / j);
    for (int j = l - 2; j > 0; j -= 2) v *= j / 3.0;
    return ((l - 1) / 2) % 2 ? -v : v;
}

PointwiseFn plain(const std::string& id, std::function<double(double)> f)
{
    PointwiseFn fn;
    fn.id = id;
    fn.f = std::move(f);
    fn.df = [](double) { return 0.0; };
    return fn;
}

} // namespace

TEST_CASE("gauss_hermite_rule moments")
{
    const auto rule = gauss_hermite_rule(64);
    CHECK(rule.expect([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(rule.expect([](double x) { return x * x * x * x; }) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(rule.expect([](double x) { return std::pow(x, 6); }) == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(std::abs(rule.expect([](double x) { return x; })) < 1e-12);
    CHECK(std::abs(rule.expect([](double x) { return x * x; }) - 1.0) < 1e-10);
    double s = 0.0;
    for (double w : rule.weights) {
        CHECK(w > 0.0);
        s += w;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK_THROWS_AS(gauss_hermite_rule(1), std::invalid_argument);
}

TEST_CASE("gauss_hermite_rule is exact to degree 2n-1")
{
    const auto rule = gauss_hermite_rule(8);
    // E[x^14] = 13!! = 135135
    CHECK(rule.expect([](double x) { return std::pow(x, 14); }) == doctest::Approx(135135.0).epsilon(1e-11));
    CHECK(std::abs(rule.expect([](double x) { return std::pow(x, 15); })) < 1e-8);
}

TEST_CASE("hermite_polynomial values")
{
    CHECK(hermite_polynomial(0, 7.3) == 1.0);
    CHECK(hermite_polynomial(1, 2.0) == 2.0);
    CHECK(std::abs(hermite_polynomial(2, 1.0)) < 1e-15);
    CHECK(hermite_polynomial(3, 2.0) == doctest::Approx((8.0 - 6.0) / std::sqrt(6.0)).epsilon(1e-14));
    CHECK_THROWS(hermite_polynomial(-1, 0.0));
}

TEST_CASE("hermite orthonormality under the rule")
{
    const auto& rule = inner_rule();
    for (int l = 0; l <= 10; ++l)
        for (int m = 0; m <= 10; ++m) {
            const double v = rule.expect([&](double x) { return hermite_polynomial(l, x) * hermite_polynomial(m, x); });
            CHECK(std::abs(v - (l == m ? 1.0 : 0.0)) < 1e-8);
        }
}

TEST_CASE("shifted_hermite_coeff examples")
{
    const auto& id = activation("identity");
    for (double s : {-1.3, 0.0, 0.7}) CHECK(shifted_hermite_coeff(id, 0, s, 2.0) == doctest::Approx(2.0 * s));

    const auto& erf_ = activation("erf");
    for (double s : {-2.0, -0.4, 0.3, 1.7})
        CHECK(std::abs(shifted_hermite_coeff(erf_, 0, s, 1.0) - std::erf(s / std::sqrt(3.0))) < 1e-12);

    // E[relu(z) z] by adaptive integration of z^2 phi(z) over [0, 40].
    const double oracle = integrate([](double x) { return x * x * phi(x); }, 0.0, 40.0);
    CHECK(std::abs(oracle - 0.5) < 1e-10);
    for (double zeta : {-3.0, 0.5, 2.0})
        CHECK(std::abs(shifted_hermite_coeff(activation("relu"), 1, 0.0, zeta) - oracle) < 1e-10);
}

TEST_CASE("relu closed forms agree with adaptive integration at a shift")
{
    const auto& relu = activation("relu");
    const double s = 0.8;
    for (int l = 0; l <= 4; ++l) {
        const double oracle =
            integrate([&](double z) { return std::max(z + s, 0.0) * hermite_polynomial(l, z) * phi(z); }, -s, 40.0);
        CHECK(std::abs(shifted_hermite_coeff(relu, l, s, 1.0) - oracle) < 1e-9);
    }
}

TEST_CASE("shift consistency and zeta = 0")
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (const auto& id : activation_ids()) {
        const auto& f = activation(id);
        for (int t = 0; t < 10; ++t) {
            const double kappa = U(gen), zeta = U(gen);
            for (int l = 0; l <= 3; ++l) {
                CHECK(std::abs(shifted_hermite_coeff(f, l, kappa, zeta) - shifted_hermite_coeff(f, l, kappa * zeta, 1.0)) <
                      1e-10);
                CHECK(std::abs(shifted_hermite_coeff(f, l, kappa, 0.0) - shifted_hermite_coeff(f, l, 0.0, 0.0)) < 1e-14);
            }
        }
    }
}

TEST_CASE("Parseval at random (kappa, zeta) for every built-in activation")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (const auto& id : activation_ids()) {
        const auto& f = activation(id);
        for (int t = 0; t < 50; ++t) {
            const double kappa = U(gen), zeta = U(gen);
            const double c0 = shifted_hermite_coeff(f, 0, kappa, zeta);
            const double c1 = shifted_hermite_coeff(f, 1, kappa, zeta);
            const double r = residual_second_moment(f, kappa, zeta);
            const double m2 =
                integrate([&](double z) { return f(z + kappa * zeta) * f(z + kappa * zeta) * phi(z); }, -14.0, 14.0);
            CHECK(std::abs(c0 * c0 + c1 * c1 + r - m2) < 1e-8);
        }
    }
}

TEST_CASE("residual_second_moment examples")
{
    CHECK(std::abs(residual_second_moment(activation("identity"), 0.4, 1.2)) < 1e-12);
    CHECK(std::abs(residual_second_moment(activation("h2"), 0.0, 0.0) - 1.0) < 1e-12);

    // Truncated series oracle with L = 40.
    const auto& th = activation("tanh");
    double series = 0.0;
    for (int l = 2; l <= 40; ++l) {
        const double c = shifted_hermite_coeff(th, l, 1.0, 1.0);
        series += c * c;
    }
    CHECK(std::abs(residual_second_moment(th, 1.0, 1.0) - series) < 1e-8);
}

TEST_CASE("hermite_tail_check")
{
    const auto lin = hermite_tail_check(activation("identity"), 2);
    CHECK(lin.pass);
    CHECK(std::abs(lin.tail) < 1e-12);
    // The erf tail decays like (2/3)^L; it drops below 1e-8 only past L = 30.
    double oracle20 = 0.0;
    for (int l = 21; l < 400; l += 2) oracle20 += erf_coeff(l) * erf_coeff(l);
    const auto erf20 = hermite_tail_check(activation("erf"), 20);
    CHECK(std::abs(erf20.tail - oracle20) < 1e-10);
    CHECK(erf20.tail > 1e-8);
    CHECK(hermite_tail_check(activation("erf"), 40).pass);
    for (int l = 0; l <= 6; ++l)
        CHECK(std::abs(shifted_hermite_coeff(activation("erf"), l, 0.0, 0.0) - erf_coeff(l)) < 1e-12);
    const auto sign = plain("sign", [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
    TailReport rep;
    CHECK_NOTHROW(rep = hermite_tail_check(sign, 20));
    CHECK_FALSE(rep.pass);
    CHECK(rep.tail > 1e-8);
}

TEST_CASE("doubling quadrature nodes changes outer expectations by < 1e-9")
{
    const auto coarse = gauss_hermite_rule(kOuterNodes);
    const auto fine = gauss_hermite_rule(2 * kOuterNodes);
    const auto& th = activation("tanh");
    auto integrand = [&](double k) {
        const auto m = shifted_moments(th, 1.5 * k);
        return m.c1 * m.c1 / (1.0 + 0.3 * m.r) + m.c0 * std::sin(k);
    };
    CHECK(std::abs(coarse.expect(integrand) - fine.expect(integrand)) < 1e-9);
}
