#include "srf/quadrature.hpp"

#include "srf/functions.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace srf {

double hermite_polynomial(int l, double x)
{
    if (l < 0) throw std::invalid_argument("hermite_polynomial: negative order");
    double hm = 0.0, h = 1.0;
    for (int k = 0; k < l; ++k) {
        const double hp = (x * h - std::sqrt(double(k)) * hm) / std::sqrt(double(k + 1));
        hm = h;
        h = hp;
    }
    return h;
}

void hermite_values(int L, double x, double* out)
{
    out[0] = 1.0;
    if (L >= 1) out[1] = x;
    for (int k = 1; k < L; ++k)
        out[k + 1] = (x * out[k] - std::sqrt(double(k)) * out[k - 1]) / std::sqrt(double(k + 1));
}

QuadratureRule gauss_hermite_rule(int n)
{
    if (n < 2) throw std::invalid_argument("gauss_hermite_rule: need n >= 2, got " + std::to_string(n));

    // Golub-Welsch on the Jacobi matrix of the monic probabilists' family.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = es.eigenvalues()[i];
        // Newton polish: h_n' = sqrt(n) h_{n-1}.
        for (int it = 0; it < 8; ++it) {
            const double hn = hermite_polynomial(n, x);
            const double hn1 = hermite_polynomial(n - 1, x);
            const double dx = hn / (std::sqrt(double(n)) * hn1);
            x -= dx;
            if (std::abs(dx) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        const double hn1 = hermite_polynomial(n - 1, x);
        rule.nodes[i] = x;
        rule.weights[i] = 1.0 / (n * hn1 * hn1);
    }
    // Symmetrize to kill round-off drift.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (auto& w : rule.weights) w /= total;
    return rule;
}

const QuadratureRule& outer_rule()
{
    static const QuadratureRule rule = gauss_hermite_rule(kOuterNodes);
    return rule;
}

const QuadratureRule& inner_rule()
{
    static const QuadratureRule rule = gauss_hermite_rule(kInnerNodes);
    return rule;
}

namespace {

double checked(const PointwiseFn& sigma, double x)
{
    const double v = sigma.f(x);
    if (!std::isfinite(v))
        throw std::domain_error("activation '" + sigma.id + "' is not finite at " + std::to_string(x));
    return v;
}

double quad_coeff(const PointwiseFn& sigma, int l, double s)
{
    const auto& rule = inner_rule();
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i)
        acc += rule.weights[i] * checked(sigma, rule.nodes[i] + s) * hermite_polynomial(l, rule.nodes[i]);
    return acc;
}

} // namespace

double shifted_hermite_coeff(const PointwiseFn& sigma, int l, double kappa, double zeta)
{
    if (l < 0) throw std::invalid_argument("shifted_hermite_coeff: negative order");
    const double s = kappa * zeta;
    if (sigma.coeff) return sigma.coeff(l, s);
    return quad_coeff(sigma, l, s);
}

double shifted_second_moment(const PointwiseFn& sigma, double s)
{
    if (sigma.second_moment) return sigma.second_moment(s);
    const auto& rule = inner_rule();
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
        const double v = checked(sigma, rule.nodes[i] + s);
        acc += rule.weights[i] * v * v;
    }
    return acc;
}

ShiftedMoments shifted_moments(const PointwiseFn& sigma, double s)
{
    ShiftedMoments m;
    if (sigma.coeff && sigma.second_moment) {
        m.c0 = sigma.coeff(0, s);
        m.c1 = sigma.coeff(1, s);
        m.r = sigma.second_moment(s) - m.c0 * m.c0 - m.c1 * m.c1;
    } else {
        const auto& rule = inner_rule();
        double a0 = 0.0, a1 = 0.0, a2 = 0.0;
        for (int i = 0; i < rule.size(); ++i) {
            const double v = checked(sigma, rule.nodes[i] + s);
            a0 += rule.weights[i] * v;
            a1 += rule.weights[i] * v * rule.nodes[i];
            a2 += rule.weights[i] * v * v;
        }
        m.c0 = a0;
        m.c1 = a1;
        m.r = a2 - a0 * a0 - a1 * a1;
    }
    const double scale = 1.0 + m.c0 * m.c0 + m.c1 * m.c1;
    if (m.r < -1e-10 * scale)
        throw std::runtime_error("residual second moment negative (" + std::to_string(m.r) + ") for '" + sigma.id + "'");
    m.r = std::max(m.r, 0.0);
    return m;
}

double residual_second_moment(const PointwiseFn& sigma, double kappa, double zeta)
{
    return shifted_moments(sigma, kappa * zeta).r;
}

TailReport hermite_tail_check(const PointwiseFn& sigma, int L, double threshold)
{
    if (L < 2) throw std::invalid_argument("hermite_tail_check: need L >= 2");
    TailReport rep;
    rep.threshold = threshold;
    double head = 0.0;
    for (int l = 0; l <= L; ++l) {
        const double c = shifted_hermite_coeff(sigma, l, 0.0, 0.0);
        head += c * c;
    }
    rep.tail = std::max(0.0, shifted_second_moment(sigma, 0.0) - head);
    rep.pass = rep.tail < threshold;
    return rep;
}

} // namespace srf
