#pragma once

#include <vector>

namespace srf {

struct PointwiseFn;

// Gauss-Hermite rule for the standard normal weight; weights sum to 1.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }

    template <class F>
    double expect(F&& f) const
    {
        double s = 0.0;
        for (int i = 0; i < size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

constexpr int kOuterNodes = 201;
constexpr int kInnerNodes = 127;

QuadratureRule gauss_hermite_rule(int n);

// Cached rules with the default node counts.
const QuadratureRule& outer_rule();
const QuadratureRule& inner_rule();

// Normalized probabilists' Hermite polynomial h_l.
double hermite_polynomial(int l, double x);

// h_0(x)..h_L(x) into out[0..L].
void hermite_values(int L, double x, double* out);

// c_l(kappa, zeta) = E_z[sigma(z + kappa*zeta) h_l(z)].
double shifted_hermite_coeff(const PointwiseFn& sigma, int l, double kappa, double zeta);

// E_z[sigma(z + s)^2].
double shifted_second_moment(const PointwiseFn& sigma, double s);

// r = E[sigma(z+kappa*zeta)^2] - c_0^2 - c_1^2.
double residual_second_moment(const PointwiseFn& sigma, double kappa, double zeta);

struct ShiftedMoments {
    double c0 = 0.0;
    double c1 = 0.0;
    double r = 0.0;
};

ShiftedMoments shifted_moments(const PointwiseFn& sigma, double s);

struct TailReport {
    double tail = 0.0;
    double threshold = 1e-8;
    bool pass = false;
};

// Sum_{l>L} c_l(0,0)^2 by Parseval difference.
TailReport hermite_tail_check(const PointwiseFn& sigma, int L, double threshold = 1e-8);

} // namespace srf
