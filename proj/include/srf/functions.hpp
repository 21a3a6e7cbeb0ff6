#pragma once

#include <functional>
#include <string>
#include <vector>

namespace srf {

// Pointwise map used as activation or link. The optional closed forms
// replace quadrature for maps with kinks.
struct PointwiseFn {
    std::string id;
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(int, double)> coeff;       // c_l(s) = E[f(z+s) h_l(z)]
    std::function<double(double)> second_moment;    // E[f(z+s)^2]
    std::vector<double> kinks;

    double operator()(double x) const { return f(x); }
};

const PointwiseFn& activation(const std::string& id);
const PointwiseFn& link(const std::string& id);

void register_activation(PointwiseFn fn);
void register_link(PointwiseFn fn);

std::vector<std::string> activation_ids();
std::vector<std::string> link_ids();

// Scalar Gaussian summaries of a map at zero shift.
double gaussian_mean(const PointwiseFn& fn);          // E[f(xi)]
double first_hermite(const PointwiseFn& fn);          // E[f(xi) xi]
double second_moment(const PointwiseFn& fn);          // E[f(xi)^2]
double derivative_mean(const PointwiseFn& fn);        // E[f'(xi)]
double derivative_second_moment(const PointwiseFn& fn); // E[f'(xi)^2]
bool is_odd(const PointwiseFn& fn);

// Max abs gap between df and a central difference at random points away from kinks.
double derivative_check(const PointwiseFn& fn, int points = 20, unsigned seed = 7);

} // namespace srf
