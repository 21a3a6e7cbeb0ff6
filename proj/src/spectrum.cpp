#include "srf/spectrum.hpp"

#include "srf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace srf {

StieltjesValue stieltjes(const TheoryModel& model, cd z, const FixedPointState* warm, const SolverOptions& opt)
{
    StieltjesValue v;
    v.state = solve_fixed_point(model, z, 0.0, 0.0, warm, opt);
    v.m = stieltjes_from_state(model, v.state);
    return v;
}

double zero_atom(const TheoryModel& model)
{
    return std::max(0.0, 1.0 - model.alpha() / model.beta());
}

const std::vector<double>& default_eps_schedule()
{
    static const std::vector<double> e{1e-2, 5e-3, 2.5e-3};
    return e;
}

DensityCurve density_grid(const TheoryModel& model, double lo, double hi, int points, const std::vector<double>& eps,
                          const SolverOptions& opt, FixedPointCache* cache, int jobs)
{
    if (!(hi > lo) || points < 2) throw std::invalid_argument("density_grid: need hi > lo and at least two points");
    if (eps.empty()) throw std::invalid_argument("density_grid: empty eps schedule");
    for (size_t i = 0; i < eps.size(); ++i) {
        if (eps[i] < 1e-4) throw std::invalid_argument("density_grid: eps below 1e-4");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw std::invalid_argument("density_grid: eps schedule must decrease");
    }
    DensityCurve c;
    c.eps_schedule = eps;
    c.atom = zero_atom(model);
    c.grid.resize(points);
    for (int i = 0; i < points; ++i) c.grid[i] = lo + (hi - lo) * double(i) / double(points - 1);

    const size_t E = eps.size();
    // rho[e][i]: density estimate at eps[e]; NaN marks a failed solve.
    std::vector<std::vector<double>> rho(E, std::vector<double>(points, std::nan("")));
    std::vector<FixedPointState> prev_level;
    std::vector<char> prev_ok;
    for (size_t e = 0; e < E; ++e) {
        std::vector<FixedPointState> level(points);
        std::vector<char> ok(points, 0);  // not vector<bool>: written concurrently
        // Contiguous chunks, each warm-started along its own sweep.
        const long chunks = std::clamp<long>(jobs, 1, points);
        parallel_for(chunks, jobs, [&](long ch) {
            const int begin = int(points * ch / chunks), end = int(points * (ch + 1) / chunks);
            const FixedPointState* last = nullptr;
            for (int i = begin; i < end; ++i) {
                const cd z(c.grid[i], eps[e]);
                const FixedPointState* warm = last ? last : (e > 0 && prev_ok[i] ? &prev_level[i] : nullptr);
                try {
                    StieltjesValue v;
                    if (auto hit = cache ? cache->find(z, 0.0, 0.0) : std::nullopt) {
                        v.state = std::move(*hit);
                        v.m = stieltjes_from_state(model, v.state);
                    } else {
                        v = stieltjes(model, z, warm, opt);
                        if (cache) cache->store(v.state);
                    }
                    const cd mc = v.m + c.atom / z;
                    rho[e][i] = mc.imag() / std::numbers::pi;
                    level[i] = std::move(v.state);
                    ok[i] = true;
                    last = &level[i];
                } catch (const FixedPointError&) {
                    last = nullptr;
                }
            }
        });
        prev_level = std::move(level);
        prev_ok = std::move(ok);
    }

    c.density.resize(points);
    c.raw.resize(points);
    c.eps_used.resize(points);
    c.converged.assign(points, false);
    int consistent = 0, counted = 0;
    for (int i = 0; i < points; ++i) {
        double val = std::nan("");
        double used = std::nan("");
        if (E >= 2 && !std::isnan(rho[E - 1][i]) && !std::isnan(rho[E - 2][i])) {
            const double e1 = eps[E - 2], e2 = eps[E - 1];
            val = (e1 * rho[E - 1][i] - e2 * rho[E - 2][i]) / (e1 - e2);
            used = e2;
            c.converged[i] = true;
            ++counted;
            const double corr = std::abs(val - rho[E - 1][i]);
            const double diff = std::abs(rho[E - 1][i] - rho[E - 2][i]);
            if (diff <= 2.0 * corr + 1e-12) ++consistent;
        } else {
            for (size_t e = E; e-- > 0;)
                if (!std::isnan(rho[e][i])) {
                    val = rho[e][i];
                    used = eps[e];
                    c.converged[i] = E == 1;
                    break;
                }
        }
        c.raw[i] = std::isnan(val) ? 0.0 : val;
        c.density[i] = std::max(0.0, c.raw[i]);
        c.eps_used[i] = used;
    }
    c.eps_consistency = counted ? double(consistent) / double(counted) : 0.0;
    double m = 0.0;
    for (int i = 1; i < points; ++i) m += 0.5 * (c.density[i] + c.density[i - 1]) * (c.grid[i] - c.grid[i - 1]);
    c.mass = m + c.atom;
    return c;
}

std::vector<Interval> support_edges(const DensityCurve& curve, double threshold)
{
    if (!(threshold > 0.0)) throw std::invalid_argument("support_edges: threshold must be positive");
    std::vector<Interval> out;
    const size_t n = curve.grid.size();
    size_t i = 0;
    while (i < n) {
        if (curve.density[i] > threshold) {
            size_t j = i;
            while (j + 1 < n && curve.density[j + 1] > threshold) ++j;
            out.emplace_back(curve.grid[i], curve.grid[j]);
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

double support_width(const std::vector<Interval>& iv)
{
    return iv.empty() ? 0.0 : iv.back().second - iv.front().first;
}

DensityCdf::DensityCdf(const DensityCurve& curve) : x_(curve.grid), F_(curve.grid.size(), 0.0)
{
    for (size_t i = 1; i < x_.size(); ++i)
        F_[i] = F_[i - 1] + 0.5 * (curve.density[i] + curve.density[i - 1]) * (x_[i] - x_[i - 1]);
    const double tot = F_.empty() ? 0.0 : F_.back();
    if (!(tot > 0.0)) throw std::invalid_argument("DensityCdf: density has no mass");
    for (double& f : F_) f /= tot;
}

double DensityCdf::operator()(double x) const
{
    if (x <= x_.front()) return 0.0;
    if (x >= x_.back()) return 1.0;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const size_t j = static_cast<size_t>(it - x_.begin());
    const double t = (x - x_[j - 1]) / (x_[j] - x_[j - 1]);
    return F_[j - 1] + t * (F_[j] - F_[j - 1]);
}

double ks_distance(const DensityCurve& curve, const Eigen::VectorXd& sorted_eigs, long count)
{
    count = std::min<long>(count, sorted_eigs.size());
    if (count < 1) throw std::invalid_argument("ks_distance: no eigenvalues");
    const DensityCdf F(curve);
    const long off = sorted_eigs.size() - count;
    double ks = 0.0;
    for (long i = 0; i < count; ++i) {
        const double f = F(sorted_eigs[off + i]);
        ks = std::max({ks, std::abs(f - double(i) / double(count)), std::abs(f - double(i + 1) / double(count))});
    }
    return ks;
}

} // namespace srf
