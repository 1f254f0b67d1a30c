#include "mfg/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfg/parallel.hpp"

namespace mfg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Upwind advection d * v_x selected by the sign of the total drift d.
inline double upwind(double d, double dp, double dm) {
    return d > 0.0 ? d * dp : d * dm;
}
}  // namespace

double ValueField::gradient(int k, int i) const {
    const Grid& g = grid;
    if (i == 0) return (at(k, 1) - at(k, 0)) / g.dx;
    if (i == g.nx - 1) return (at(k, g.nx - 1) - at(k, g.nx - 2)) / g.dx;
    return (at(k, i + 1) - at(k, i - 1)) / (2.0 * g.dx);
}

BangBangPolicy BangBangPolicy::zero(const Grid& grid) {
    BangBangPolicy p;
    p.grid = grid;
    p.theta = 0.0;
    p.action.assign(static_cast<size_t>(grid.nt) * grid.nx, 0.0);
    p.lower_boundary.assign(grid.nt, kNaN);
    p.upper_boundary.assign(grid.nt, kNaN);
    return p;
}

BangBangPolicy BangBangPolicy::from_thresholds(const Grid& grid, double theta,
                                               const std::vector<double>& lower,
                                               const std::vector<double>& upper) {
    BangBangPolicy p;
    p.grid = grid;
    p.theta = theta;
    p.action.assign(static_cast<size_t>(grid.nt) * grid.nx, 0.0);
    p.lower_boundary = lower;
    p.upper_boundary = upper;
    for (int k = 0; k < grid.nt; ++k) {
        double lo = lower[k], hi = upper[k];
        for (int i = 0; i < grid.nx; ++i) {
            double x = grid.x(i);
            if (!std::isnan(lo) && x <= lo)
                p.at(k, i) = theta;
            else if (!std::isnan(hi) && x >= hi)
                p.at(k, i) = -theta;
        }
    }
    return p;
}

bool policy_monotone(const BangBangPolicy& policy, int slack_nodes) {
    const Grid& g = policy.grid;
    const double tol = 1e-12 * std::max(1.0, policy.theta);
    for (int k = 0; k < g.nt; ++k) {
        int violations = 0;
        for (int i = 0; i + 1 < g.nx; ++i)
            if (policy.at(k, i + 1) > policy.at(k, i) + tol) ++violations;
        if (violations > slack_nodes) return false;
    }
    return true;
}

double bang_bang_hamiltonian(double p, double g1, double g2, double theta) {
    return std::min({(p + g1) * theta, (-p + g2) * theta, 0.0});
}

ValueField solve_hjb(const ModelSpec& spec, const MeasureFlow& flow, const Grid& grid) {
    if (!flow.grid.same_axes(grid))
        throw std::invalid_argument("solve_hjb: flow grid mismatch");
    if (flow.size() != grid.nt)
        throw std::invalid_argument("solve_hjb: flow must have one measure per time node");
    if (grid.dt > cfl_max_dt(spec, grid.dx) * (1.0 + 1e-12))
        throw std::invalid_argument("solve_hjb: CFL violated");

    const int nx = grid.nx, nt = grid.nt;
    const double dx = grid.dx, dt = grid.dt;
    const double half_sig2 = 0.5 * spec.sigma * spec.sigma;
    const double theta = spec.theta;

    ValueField v;
    v.grid = grid;
    v.values.assign(static_cast<size_t>(nt) * nx, 0.0);
    for (int i = 0; i < nx; ++i) v.at(nt - 1, i) = spec.terminal_cost(grid.x(i));

    std::vector<double> g1v(nx), g2v(nx);
    for (int i = 0; i < nx; ++i) {
        g1v[i] = spec.g1(grid.x(i));
        g2v[i] = spec.g2(grid.x(i));
    }

    // Coefficient profiles are O(nx^2) kernel sums; reuse them while the
    // measure repeats (constant flows hit this every step).
    std::vector<double> bvec, fvec;
    const std::vector<double>* profiled_density = nullptr;
    for (int k = nt - 2; k >= 0; --k) {
        const Measure& mu = flow.at(k + 1);
        if (!profiled_density || *profiled_density != mu.density) {
            bvec = drift_profile(spec, mu);
            fvec = cost_profile(spec, mu);
            profiled_density = &mu.density;
        }
        const double* vk1 = &v.values[static_cast<size_t>(k + 1) * nx];
        double* vk = &v.values[static_cast<size_t>(k) * nx];
        parallel_for(nx, [&](int begin, int end) {
            for (int i = begin; i < end; ++i) {
                double dp = i + 1 < nx ? (vk1[i + 1] - vk1[i]) / dx
                                       : (vk1[i] - vk1[i - 1]) / dx;
                double dm = i > 0 ? (vk1[i] - vk1[i - 1]) / dx
                                  : (vk1[i + 1] - vk1[i]) / dx;
                double d2 = (i > 0 && i + 1 < nx)
                                ? (vk1[i + 1] - 2.0 * vk1[i] + vk1[i - 1]) / (dx * dx)
                                : 0.0;
                double b = bvec[i];
                double h_up = upwind(b + theta, dp, dm) + g1v[i] * theta;
                double h_dn = upwind(b - theta, dp, dm) + g2v[i] * theta;
                double h_id = upwind(b, dp, dm);
                double rhs = std::min({h_up, h_dn, h_id}) + fvec[i] + half_sig2 * d2;
                vk[i] = vk1[i] + dt * rhs;
            }
        });
    }

    for (double x : v.values)
        if (!std::isfinite(x)) throw std::runtime_error("solve_hjb: non-finite value");
    return v;
}

BangBangPolicy extract_policy(const ValueField& value, const ModelSpec& spec) {
    const Grid& g = value.grid;
    const double theta = spec.theta;

    BangBangPolicy pol;
    pol.grid = g;
    pol.theta = theta;
    pol.action.assign(static_cast<size_t>(g.nt) * g.nx, 0.0);
    pol.lower_boundary.assign(g.nt, kNaN);
    pol.upper_boundary.assign(g.nt, kNaN);

    std::vector<double> grad(g.nx), g1v(g.nx), g2v(g.nx);
    for (int i = 0; i < g.nx; ++i) {
        g1v[i] = spec.g1(g.x(i));
        g2v[i] = spec.g2(g.x(i));
    }

    for (int k = 0; k < g.nt; ++k) {
        for (int i = 0; i < g.nx; ++i) grad[i] = value.gradient(k, i);

        // Ties (p == -g1 or p == g2) keep the inactive action, so the
        // inaction interval stays closed.
        for (int i = 0; i < g.nx; ++i) {
            double p = grad[i];
            if (p < -g1v[i])
                pol.at(k, i) = theta;
            else if (p > g2v[i])
                pol.at(k, i) = -theta;
        }

        // Boundaries by sign change of the switching functions s1 = v_x + g1
        // (last crossing from below) and s2 = v_x - g2 (first crossing).
        for (int i = g.nx - 2; i >= 0; --i) {
            double s0 = grad[i] + g1v[i], s1 = grad[i + 1] + g1v[i + 1];
            if (s0 < 0.0 && s1 >= 0.0) {
                double w = s1 == s0 ? 0.0 : -s0 / (s1 - s0);
                pol.lower_boundary[k] = g.x(i) + w * g.dx;
                break;
            }
        }
        for (int i = 0; i + 1 < g.nx; ++i) {
            double s0 = grad[i] - g2v[i], s1 = grad[i + 1] - g2v[i + 1];
            if (s0 <= 0.0 && s1 > 0.0) {
                double w = s1 == s0 ? 1.0 : -s0 / (s1 - s0);
                pol.upper_boundary[k] = g.x(i) + w * g.dx;
                break;
            }
        }
    }

    pol.a4_ok = policy_monotone(pol, 1);
    if (!pol.a4_ok) {
        const double tol = 1e-12 * std::max(1.0, theta);
        for (int k = 0; k < g.nt; ++k)
            for (int i = 0; i + 1 < g.nx; ++i)
                if (pol.at(k, i + 1) > pol.at(k, i) + tol) ++pol.a4_violations;
    }
    return pol;
}

ResidualField hjb_residual(const ValueField& value, const ModelSpec& spec,
                           const MeasureFlow& flow) {
    const Grid& g = value.grid;
    const int nx = g.nx, nt = g.nt;
    const double dx = g.dx, dt = g.dt;
    const double half_sig2 = 0.5 * spec.sigma * spec.sigma;
    const double theta = spec.theta;

    ResidualField res;
    res.nt_rows = nt - 1;
    res.nx_cols = nx - 2;
    res.values.assign(static_cast<size_t>(res.nt_rows) * res.nx_cols, 0.0);

    std::vector<double> bvec, fvec;
    const std::vector<double>* profiled_density = nullptr;
    for (int k = 0; k < nt - 1; ++k) {
        const Measure& mu = flow.at(k + 1);
        if (!profiled_density || *profiled_density != mu.density) {
            bvec = drift_profile(spec, mu);
            fvec = cost_profile(spec, mu);
            profiled_density = &mu.density;
        }
        for (int i = 1; i + 1 < nx; ++i) {
            double vk1 = value.at(k + 1, i);
            double dp = (value.at(k + 1, i + 1) - vk1) / dx;
            double dm = (vk1 - value.at(k + 1, i - 1)) / dx;
            double d2 = (value.at(k + 1, i + 1) - 2.0 * vk1 + value.at(k + 1, i - 1)) / (dx * dx);
            double b = bvec[i];
            double h_up = upwind(b + theta, dp, dm) + spec.g1(g.x(i)) * theta;
            double h_dn = upwind(b - theta, dp, dm) + spec.g2(g.x(i)) * theta;
            double h_id = upwind(b, dp, dm);
            double rhs = std::min({h_up, h_dn, h_id}) + fvec[i] + half_sig2 * d2;
            double r = (vk1 - value.at(k, i)) / dt + rhs;
            res.values[static_cast<size_t>(k) * res.nx_cols + (i - 1)] = r;
            res.max_norm = std::max(res.max_norm, std::abs(r));
        }
    }
    return res;
}

}  // namespace mfg
