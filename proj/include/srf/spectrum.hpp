#pragma once

#include "srf/cache.hpp"
#include "srf/detequiv.hpp"

#include <utility>
#include <vector>

namespace srf {

struct StieltjesValue {
    cd m;
    FixedPointState state;
};

// m(z) from a converged fixed point, convention flag applied.
StieltjesValue stieltjes(const TheoryModel& model, cd z, const FixedPointState* warm = nullptr,
                         const SolverOptions& opt = {});

// Mass of the zero eigenvalue block of the bulk covariance, (1 - n/p)^+.
double zero_atom(const TheoryModel& model);

struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> density;     // continuous part, clipped at 0
    std::vector<double> raw;         // before clipping
    std::vector<double> eps_used;
    std::vector<bool> converged;
    std::vector<double> eps_schedule;
    double mass = 0.0;               // trapezoid of the continuous part plus the atom
    double atom = 0.0;
    // Fraction of points where Im m at the last two eps differ by less than the extrapolation correction.
    double eps_consistency = 0.0;
};

const std::vector<double>& default_eps_schedule();

DensityCurve density_grid(const TheoryModel& model, double lo, double hi, int points,
                          const std::vector<double>& eps = default_eps_schedule(), const SolverOptions& opt = {},
                          FixedPointCache* cache = nullptr, int jobs = 1);

using Interval = std::pair<double, double>;

std::vector<Interval> support_edges(const DensityCurve& curve, double threshold = 1e-4);

// Width from the left edge of the first interval to the right edge of the last.
double support_width(const std::vector<Interval>& iv);

// Normalized CDF of the continuous part at x (linear interpolation of the cumulative trapezoid).
class DensityCdf {
public:
    explicit DensityCdf(const DensityCurve& curve);
    double operator()(double x) const;

private:
    std::vector<double> x_;
    std::vector<double> F_;
};

// KS distance between the continuous theory density and the `count` largest eigenvalues.
double ks_distance(const DensityCurve& curve, const Eigen::VectorXd& sorted_eigs, long count);

} // namespace srf
