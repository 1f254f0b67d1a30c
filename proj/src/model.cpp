#include "mfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfg {

namespace {

double table_interp1(const std::vector<double>& xs, const std::vector<double>& vals, double x) {
    if (x <= xs.front()) return vals.front();
    if (x >= xs.back()) return vals.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    int i = static_cast<int>(it - xs.begin()) - 1;
    double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return (1.0 - w) * vals[i] + w * vals[i + 1];
}

}  // namespace

double Table2d::operator()(double x, double y) const {
    const int nxs = static_cast<int>(xs.size());
    const int nys = static_cast<int>(ys.size());
    double xc = std::clamp(x, xs.front(), xs.back());
    double yc = std::clamp(y, ys.front(), ys.back());
    auto ix_it = std::upper_bound(xs.begin(), xs.end(), xc);
    auto iy_it = std::upper_bound(ys.begin(), ys.end(), yc);
    int ix = std::clamp(static_cast<int>(ix_it - xs.begin()) - 1, 0, nxs - 2);
    int iy = std::clamp(static_cast<int>(iy_it - ys.begin()) - 1, 0, nys - 2);
    double wx = (xc - xs[ix]) / (xs[ix + 1] - xs[ix]);
    double wy = (yc - ys[iy]) / (ys[iy + 1] - ys[iy]);
    auto v = [&](int i, int j) { return values[static_cast<size_t>(i) * nys + j]; };
    return (1 - wx) * ((1 - wy) * v(ix, iy) + wy * v(ix, iy + 1)) +
           wx * ((1 - wy) * v(ix + 1, iy) + wy * v(ix + 1, iy + 1));
}

double Table1d::operator()(double x) const { return table_interp1(xs, values, x); }

double ModelSpec::param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw std::invalid_argument("model: unknown parameter " + key);
    return it->second;
}

namespace {

double require_param(const ModelConfig& c, const std::string& key) {
    auto it = c.params.find(key);
    if (it == c.params.end())
        throw std::invalid_argument("model config: missing parameter '" + key + "'");
    return it->second;
}

double param_or(const ModelConfig& c, const std::string& key, double fallback) {
    auto it = c.params.find(key);
    return it == c.params.end() ? fallback : it->second;
}

void validate_common(const ModelSpec& spec) {
    if (!(spec.sigma > 0.0)) throw std::invalid_argument("model: sigma must be > 0");
    if (spec.theta < 0.0) throw std::invalid_argument("model: theta must be >= 0");
    if (!(spec.horizon > 0.0)) throw std::invalid_argument("model: horizon must be > 0");
    if (!(spec.x_lo < spec.x_hi)) throw std::invalid_argument("model: x_lo must be < x_hi");

    // A3 on a validation grid: -g1 <= g2 everywhere.
    constexpr int n = 201;
    for (int i = 0; i < n; ++i) {
        double x = spec.x_lo + i * (spec.x_hi - spec.x_lo) / (n - 1);
        if (spec.g1(x) + spec.g2(x) < 0.0)
            throw std::invalid_argument("model: A3 violated, -g1(x) > g2(x) at x=" +
                                        std::to_string(x));
    }
}

}  // namespace

ModelSpec build_model(const ModelConfig& config) {
    ModelSpec spec;
    spec.family = config.family;
    spec.params = config.params;

    if (config.family == "systemic_risk") {
        double a = require_param(config, "a");
        double eps = require_param(config, "eps");
        double c = require_param(config, "c");
        double r = require_param(config, "r");
        double m = param_or(config, "m", 0.0);
        spec.sigma = require_param(config, "sigma");
        spec.theta = require_param(config, "theta");
        spec.horizon = require_param(config, "T");
        spec.x_lo = param_or(config, "x_lo", m - 3.0);
        spec.x_hi = param_or(config, "x_hi", m + 3.0);
        spec.params["m"] = m;
        spec.b0 = [a](double x, double y) { return a * (y - x); };
        spec.f0 = [eps](double x, double y) { return 0.5 * eps * (y - x) * (y - x); };
        spec.f_mean = [eps](double x, double mbar) {
            return 0.5 * eps * (mbar - x) * (mbar - x);
        };
        spec.f_uses_mean = true;
        spec.g1 = [r](double) { return r; };
        spec.g2 = [r](double) { return r; };
        spec.terminal_cost = [c, m](double x) { return 0.5 * c * (m - x) * (m - x); };
        spec.terminal_mean = [c](double x, double mbar) {
            return 0.5 * c * (mbar - x) * (mbar - x);
        };
    } else if (config.family == "zero") {
        double gc1 = param_or(config, "g1", 1.0);
        double gc2 = param_or(config, "g2", 1.0);
        spec.sigma = param_or(config, "sigma", 1.0);
        spec.theta = param_or(config, "theta", 0.0);
        spec.horizon = param_or(config, "T", 1.0);
        spec.x_lo = param_or(config, "x_lo", -1.0);
        spec.x_hi = param_or(config, "x_hi", 1.0);
        spec.b0 = [](double, double) { return 0.0; };
        spec.f0 = [](double, double) { return 0.0; };
        spec.g1 = [gc1](double) { return gc1; };
        spec.g2 = [gc2](double) { return gc2; };
        spec.terminal_cost = [](double) { return 0.0; };
    } else if (config.family == "tabulated") {
        if (!config.b0_table || !config.f0_table)
            throw std::invalid_argument("model config: tabulated family needs b0 and f0 tables");
        spec.sigma = require_param(config, "sigma");
        spec.theta = require_param(config, "theta");
        spec.horizon = require_param(config, "T");
        spec.x_lo = require_param(config, "x_lo");
        spec.x_hi = require_param(config, "x_hi");
        Table2d b0t = *config.b0_table;
        Table2d f0t = *config.f0_table;
        spec.b0 = [b0t](double x, double y) { return b0t(x, y); };
        spec.f0 = [f0t](double x, double y) { return f0t(x, y); };
        if (config.g1_table) {
            Table1d t = *config.g1_table;
            spec.g1 = [t](double x) { return t(x); };
        } else {
            double gc = param_or(config, "g1", 1.0);
            spec.g1 = [gc](double) { return gc; };
        }
        if (config.g2_table) {
            Table1d t = *config.g2_table;
            spec.g2 = [t](double x) { return t(x); };
        } else {
            double gc = param_or(config, "g2", 1.0);
            spec.g2 = [gc](double) { return gc; };
        }
        if (config.terminal_table) {
            Table1d t = *config.terminal_table;
            spec.terminal_cost = [t](double x) { return t(x); };
        } else {
            spec.terminal_cost = [](double) { return 0.0; };
        }
    } else {
        throw std::invalid_argument("model config: unknown family '" + config.family + "'");
    }

    validate_common(spec);
    return spec;
}

AssumptionReport check_assumptions(const ModelSpec& spec, const Grid& grid) {
    AssumptionReport rep;
    rep.min_g_sum = std::numeric_limits<double>::infinity();

    double lip_b0x = 0, lip_b0y = 0, lip_f0x = 0, lip_f0y = 0, lip_g1 = 0, lip_g2 = 0;
    double bound_b0 = 0, bound_f0 = 0;
    for (int i = 0; i < grid.nx; ++i) {
        double x = grid.x(i);
        rep.min_g_sum = std::min(rep.min_g_sum, spec.g1(x) + spec.g2(x));
        if (i + 1 < grid.nx) {
            double xn = grid.x(i + 1);
            lip_g1 = std::max(lip_g1, std::abs(spec.g1(xn) - spec.g1(x)) / grid.dx);
            lip_g2 = std::max(lip_g2, std::abs(spec.g2(xn) - spec.g2(x)) / grid.dx);
        }
        for (int j = 0; j < grid.nx; ++j) {
            double y = grid.x(j);
            bound_b0 = std::max(bound_b0, std::abs(spec.b0(x, y)));
            bound_f0 = std::max(bound_f0, std::abs(spec.f0(x, y)));
            if (i + 1 < grid.nx) {
                lip_b0x = std::max(lip_b0x,
                                   std::abs(spec.b0(grid.x(i + 1), y) - spec.b0(x, y)) / grid.dx);
                lip_f0x = std::max(lip_f0x,
                                   std::abs(spec.f0(grid.x(i + 1), y) - spec.f0(x, y)) / grid.dx);
            }
            if (j + 1 < grid.nx) {
                lip_b0y = std::max(lip_b0y,
                                   std::abs(spec.b0(x, grid.x(j + 1)) - spec.b0(x, y)) / grid.dx);
                lip_f0y = std::max(lip_f0y,
                                   std::abs(spec.f0(x, grid.x(j + 1)) - spec.f0(x, y)) / grid.dx);
            }
        }
    }
    rep.a3_ok = rep.min_g_sum >= 0.0;
    rep.lipschitz = {lip_b0x, lip_b0y, lip_f0x, lip_f0y, lip_g1, lip_g2, bound_b0, bound_f0};
    return rep;
}

MeanFieldCoeffs mean_field_coeffs(const ModelSpec& spec, double x, const Measure& mu) {
    validate_measure(mu, 1e-8);
    const Grid& g = mu.grid;
    double b = 0.0, f = 0.0;
    for (int j = 0; j < g.nx; ++j) {
        double w = mu.density[j] * g.dx;
        if (w == 0.0) continue;
        double y = g.x(j);
        b += spec.b0(x, y) * w;
        if (!spec.f_uses_mean) f += spec.f0(x, y) * w;
    }
    if (spec.f_uses_mean) f = spec.f_mean(x, mu.mean());
    return {b, f};
}

std::vector<double> drift_profile(const ModelSpec& spec, const Measure& mu) {
    const Grid& g = mu.grid;
    std::vector<double> b(g.nx, 0.0);
    for (int i = 0; i < g.nx; ++i) {
        double x = g.x(i);
        double acc = 0.0;
        for (int j = 0; j < g.nx; ++j) {
            double w = mu.density[j];
            if (w != 0.0) acc += spec.b0(x, g.x(j)) * w;
        }
        b[i] = acc * g.dx;
    }
    return b;
}

std::vector<double> cost_profile(const ModelSpec& spec, const Measure& mu) {
    const Grid& g = mu.grid;
    std::vector<double> f(g.nx, 0.0);
    if (spec.f_uses_mean) {
        double m = mu.mean();
        for (int i = 0; i < g.nx; ++i) f[i] = spec.f_mean(g.x(i), m);
        return f;
    }
    for (int i = 0; i < g.nx; ++i) {
        double x = g.x(i);
        double acc = 0.0;
        for (int j = 0; j < g.nx; ++j) {
            double w = mu.density[j];
            if (w != 0.0) acc += spec.f0(x, g.x(j)) * w;
        }
        f[i] = acc * g.dx;
    }
    return f;
}

double drift_bound(const ModelSpec& spec, int samples) {
    double bound = 0.0;
    for (int i = 0; i < samples; ++i) {
        double x = spec.x_lo + i * (spec.x_hi - spec.x_lo) / (samples - 1);
        for (int j = 0; j < samples; ++j) {
            double y = spec.x_lo + j * (spec.x_hi - spec.x_lo) / (samples - 1);
            bound = std::max(bound, std::abs(spec.b0(x, y)));
        }
    }
    return bound;
}

double cfl_max_dt(const ModelSpec& spec, double dx) {
    double b = drift_bound(spec);
    return dx * dx / (spec.sigma * spec.sigma + dx * (b + spec.theta));
}

int cfl_time_nodes(const ModelSpec& spec, int nx) {
    double dx = (spec.x_hi - spec.x_lo) / (nx - 1);
    double dt_max = cfl_max_dt(spec, dx);
    int nt = static_cast<int>(std::ceil(spec.horizon / dt_max)) + 1;
    return std::max(nt, 2);
}

Grid make_model_grid(const ModelSpec& spec, int nx, int nt) {
    Grid g = make_grid(spec.x_lo, spec.x_hi, spec.horizon, nx, nt);
    if (g.dt > cfl_max_dt(spec, g.dx) * (1.0 + 1e-12))
        throw std::invalid_argument("grid: CFL violated, need nt >= " +
                                    std::to_string(cfl_time_nodes(spec, nx)));
    return g;
}

double boundary_mass(const MeasureFlow& flow, int band) {
    double worst = 0.0;
    const Grid& g = flow.grid;
    for (const auto& mu : flow.steps) {
        double m = 0.0;
        for (int i = 0; i < band && i < g.nx; ++i)
            m += (mu.density[i] + mu.density[g.nx - 1 - i]) * g.dx;
        worst = std::max(worst, m);
    }
    return worst;
}

}  // namespace mfg
