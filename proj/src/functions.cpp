#include "srf/functions.hpp"

#include "srf/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>

namespace srf {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double npdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double ncdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

PointwiseFn make_relu()
{
    PointwiseFn fn;
    fn.id = "relu";
    fn.f = [](double x) { return x > 0.0 ? x : 0.0; };
    fn.df = [](double x) { return x > 0.0 ? 1.0 : 0.0; };
    fn.coeff = [](int l, double s) {
        if (l == 0) return s * ncdf(s) + npdf(s);
        if (l == 1) return ncdf(s);
        return npdf(s) * hermite_polynomial(l - 2, -s) / std::sqrt(double(l) * (l - 1));
    };
    fn.second_moment = [](double s) { return (s * s + 1.0) * ncdf(s) + s * npdf(s); };
    fn.kinks = {0.0};
    return fn;
}

PointwiseFn make_identity()
{
    PointwiseFn fn;
    fn.id = "identity";
    fn.f = [](double x) { return x; };
    fn.df = [](double) { return 1.0; };
    fn.coeff = [](int l, double s) { return l == 0 ? s : (l == 1 ? 1.0 : 0.0); };
    fn.second_moment = [](double s) { return s * s + 1.0; };
    return fn;
}

PointwiseFn make_sin()
{
    PointwiseFn fn;
    fn.id = "sin";
    fn.f = [](double x) { return std::sin(x); };
    fn.df = [](double x) { return std::cos(x); };
    fn.coeff = [](int l, double s) {
        double v = 0.0;
        switch (l % 4) {
        case 0: v = std::sin(s); break;
        case 1: v = std::cos(s); break;
        case 2: v = -std::sin(s); break;
        default: v = -std::cos(s); break;
        }
        return std::exp(-0.5 - 0.5 * std::lgamma(l + 1.0)) * v;
    };
    fn.second_moment = [](double s) { return 0.5 * (1.0 - std::cos(2.0 * s) * std::exp(-2.0)); };
    return fn;
}

PointwiseFn make_simple(std::string id, std::function<double(double)> f, std::function<double(double)> df)
{
    PointwiseFn fn;
    fn.id = std::move(id);
    fn.f = std::move(f);
    fn.df = std::move(df);
    return fn;
}

struct Registry {
    std::mutex mu;
    std::map<std::string, PointwiseFn> activations;
    std::map<std::string, PointwiseFn> links;

    Registry()
    {
        const double r2 = std::sqrt(2.0), r6 = std::sqrt(6.0), rpi = std::sqrt(M_PI);
        auto add_act = [&](PointwiseFn fn) { activations[fn.id] = fn; };
        add_act(make_relu());
        add_act(make_identity());
        add_act(make_sin());
        add_act(make_simple("erf", [](double x) { return std::erf(x); },
                            [rpi](double x) { return 2.0 / rpi * std::exp(-x * x); }));
        add_act(make_simple("tanh", [](double x) { return std::tanh(x); },
                            [](double x) { const double t = std::tanh(x); return 1.0 - t * t; }));
        add_act(make_simple("h3", [r6](double x) { return (x * x * x - 3.0 * x) / r6; },
                            [r6](double x) { return (3.0 * x * x - 3.0) / r6; }));
        add_act(make_simple("h2", [r2](double x) { return (x * x - 1.0) / r2; },
                            [r2](double x) { return r2 * x; }));

        auto add_link = [&](PointwiseFn fn) { links[fn.id] = fn; };
        add_link(activations["identity"]);
        add_link(activations["sin"]);
        add_link(activations["tanh"]);
        add_link(make_simple("sign-smoothed", [](double x) { return std::tanh(5.0 * x); },
                             [](double x) { const double t = std::tanh(5.0 * x); return 5.0 * (1.0 - t * t); }));
        add_link(make_simple("zero", [](double) { return 0.0; }, [](double) { return 0.0; }));
        add_link(make_simple("square", [](double x) { return x * x; }, [](double x) { return 2.0 * x; }));
    }
};

Registry& registry()
{
    static Registry reg;
    return reg;
}

const PointwiseFn& lookup(std::map<std::string, PointwiseFn>& m, const std::string& id, const char* kind)
{
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mu);
    auto it = m.find(id);
    if (it == m.end()) throw std::invalid_argument(std::string("unknown ") + kind + " '" + id + "'");
    return it->second;
}

} // namespace

const PointwiseFn& activation(const std::string& id) { return lookup(registry().activations, id, "activation"); }
const PointwiseFn& link(const std::string& id) { return lookup(registry().links, id, "link"); }

void register_activation(PointwiseFn fn)
{
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mu);
    reg.activations[fn.id] = std::move(fn);
}

void register_link(PointwiseFn fn)
{
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mu);
    reg.links[fn.id] = std::move(fn);
}

std::vector<std::string> activation_ids()
{
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mu);
    std::vector<std::string> out;
    for (auto& [k, v] : reg.activations) out.push_back(k);
    return out;
}

std::vector<std::string> link_ids()
{
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mu);
    std::vector<std::string> out;
    for (auto& [k, v] : reg.links) out.push_back(k);
    return out;
}

double gaussian_mean(const PointwiseFn& fn) { return shifted_hermite_coeff(fn, 0, 0.0, 0.0); }
double first_hermite(const PointwiseFn& fn) { return shifted_hermite_coeff(fn, 1, 0.0, 0.0); }
double second_moment(const PointwiseFn& fn) { return shifted_second_moment(fn, 0.0); }

double derivative_mean(const PointwiseFn& fn)
{
    if (!fn.df) throw std::invalid_argument("'" + fn.id + "' has no derivative");
    return inner_rule().expect([&](double x) { return fn.df(x); });
}

double derivative_second_moment(const PointwiseFn& fn)
{
    if (!fn.df) throw std::invalid_argument("'" + fn.id + "' has no derivative");
    if (fn.id == "relu") return 0.5;
    return inner_rule().expect([&](double x) { const double v = fn.df(x); return v * v; });
}

bool is_odd(const PointwiseFn& fn)
{
    for (double x : {0.1, 0.37, 0.9, 1.7, 2.9}) {
        const double a = fn.f(x), b = fn.f(-x);
        if (std::abs(a + b) > 1e-12 * (1.0 + std::abs(a))) return false;
    }
    return std::abs(fn.f(0.0)) < 1e-14;
}

double derivative_check(const PointwiseFn& fn, int points, unsigned seed)
{
    if (!fn.df) return 0.0;
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const double h = 1e-5;
    double worst = 0.0;
    int done = 0;
    while (done < points) {
        const double x = u(gen);
        bool near_kink = false;
        for (double k : fn.kinks) near_kink = near_kink || std::abs(x - k) < 1e-3;
        if (near_kink) continue;
        const double fd = (fn.f(x + h) - fn.f(x - h)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - fn.df(x)));
        ++done;
    }
    return worst;
}

} // namespace srf
