#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mfg {

// Uniform space-time grid on [x_lo, x_hi] x [0, horizon].
struct Grid {
    double x_lo = 0.0;
    double x_hi = 1.0;
    double horizon = 1.0;
    int nx = 3;
    int nt = 2;
    double dx = 0.5;
    double dt = 1.0;

    double x(int i) const { return x_lo + i * dx; }
    double t(int k) const { return k * dt; }

    int clamp_node(int i) const { return std::min(std::max(i, 0), nx - 1); }

    // Nearest spatial node, clamped to the domain.
    int nearest_node(double xq) const {
        return clamp_node(static_cast<int>(std::lround((xq - x_lo) / dx)));
    }

    // Nearest time node, clamped to [0, nt-1].
    int nearest_time(double tq) const {
        int k = static_cast<int>(std::lround(tq / dt));
        return std::min(std::max(k, 0), nt - 1);
    }

    bool same_axes(const Grid& o) const {
        return nx == o.nx && nt == o.nt && x_lo == o.x_lo && x_hi == o.x_hi &&
               horizon == o.horizon;
    }

    bool same_space(const Grid& o) const {
        return nx == o.nx && x_lo == o.x_lo && x_hi == o.x_hi;
    }

    std::vector<double> x_nodes() const {
        std::vector<double> xs(nx);
        for (int i = 0; i < nx; ++i) xs[i] = x(i);
        return xs;
    }

    std::vector<double> t_nodes() const {
        std::vector<double> ts(nt);
        for (int k = 0; k < nt; ++k) ts[k] = t(k);
        return ts;
    }
};

inline Grid make_grid(double x_lo, double x_hi, double horizon, int nx, int nt) {
    if (!(x_lo < x_hi)) throw std::invalid_argument("grid: x_lo must be < x_hi");
    if (horizon <= 0.0) throw std::invalid_argument("grid: horizon must be > 0");
    if (nx < 3) throw std::invalid_argument("grid: nx must be >= 3");
    if (nt < 2) throw std::invalid_argument("grid: nt must be >= 2");
    Grid g;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    g.horizon = horizon;
    g.nx = nx;
    g.nt = nt;
    g.dx = (x_hi - x_lo) / (nx - 1);
    g.dt = horizon / (nt - 1);
    return g;
}

// Linear interpolation of node values at an off-grid point, clamped at the ends.
inline double interp_nodes(const Grid& g, const std::vector<double>& values, double xq) {
    if (xq <= g.x_lo) return values.front();
    if (xq >= g.x_hi) return values.back();
    double s = (xq - g.x_lo) / g.dx;
    int i = std::min(static_cast<int>(s), g.nx - 2);
    double w = s - i;
    return (1.0 - w) * values[i] + w * values[i + 1];
}

}  // namespace mfg
