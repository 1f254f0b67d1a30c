#include "mfg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mfg {

double Measure::mass() const {
    return std::accumulate(density.begin(), density.end(), 0.0) * grid.dx;
}

double Measure::mean() const {
    double m = 0.0;
    for (int i = 0; i < grid.nx; ++i) m += grid.x(i) * density[i];
    return m * grid.dx;
}

double Measure::variance() const {
    double m = mean();
    double v = 0.0;
    for (int i = 0; i < grid.nx; ++i) {
        double d = grid.x(i) - m;
        v += d * d * density[i];
    }
    return v * grid.dx;
}

Measure Measure::normalized(const Grid& grid, std::vector<double> density) {
    if (static_cast<int>(density.size()) != grid.nx)
        throw std::invalid_argument("measure: density size does not match grid");
    double total = std::accumulate(density.begin(), density.end(), 0.0) * grid.dx;
    if (!(total > 0.0) || !std::isfinite(total))
        throw std::invalid_argument("measure: density must have positive finite mass");
    for (auto& d : density) {
        if (d < 0.0 || !std::isfinite(d))
            throw std::invalid_argument("measure: density must be nonnegative and finite");
        d /= total;
    }
    return Measure{grid, std::move(density)};
}

Measure Measure::gaussian(const Grid& grid, double mean, double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("measure: variance must be > 0");
    std::vector<double> d(grid.nx);
    for (int i = 0; i < grid.nx; ++i) {
        double z = grid.x(i) - mean;
        d[i] = std::exp(-0.5 * z * z / variance);
    }
    return normalized(grid, std::move(d));
}

Measure Measure::point_mass(const Grid& grid, double x) {
    std::vector<double> d(grid.nx, 0.0);
    double xq = std::clamp(x, grid.x_lo, grid.x_hi);
    double s = (xq - grid.x_lo) / grid.dx;
    int i = std::min(static_cast<int>(s), grid.nx - 2);
    double w = s - i;
    d[i] = (1.0 - w);
    d[i + 1] = w;
    return normalized(grid, std::move(d));
}

Measure Measure::uniform(const Grid& grid, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("measure: need a < b");
    std::vector<double> d(grid.nx, 0.0);
    for (int i = 0; i < grid.nx; ++i) {
        double x = grid.x(i);
        if (x >= a && x <= b) d[i] = 1.0;
    }
    return normalized(grid, std::move(d));
}

void validate_measure(const Measure& mu, double tol) {
    if (static_cast<int>(mu.density.size()) != mu.grid.nx)
        throw std::invalid_argument("measure: density size does not match grid");
    for (double d : mu.density)
        if (d < 0.0 || !std::isfinite(d))
            throw std::invalid_argument("measure: density must be nonnegative and finite");
    if (std::abs(mu.mass() - 1.0) > tol)
        throw std::invalid_argument("measure: mass deviates from 1 beyond tolerance");
}

MeasureFlow MeasureFlow::constant(const Grid& grid, const Measure& mu) {
    if (!mu.grid.same_space(grid))
        throw std::invalid_argument("measure flow: measure lives on a different spatial grid");
    MeasureFlow flow;
    flow.grid = grid;
    flow.steps.assign(grid.nt, mu);
    for (auto& step : flow.steps) step.grid = grid;
    return flow;
}

namespace {

// Trapezoidal CDF at the grid nodes (F[0] = 0).
std::vector<double> cdf_of(const Measure& mu) {
    const Grid& g = mu.grid;
    std::vector<double> F(g.nx, 0.0);
    for (int i = 1; i < g.nx; ++i)
        F[i] = F[i - 1] + 0.5 * (mu.density[i - 1] + mu.density[i]) * g.dx;
    return F;
}

double quantile(const Grid& g, const std::vector<double>& F, double u) {
    // F is nondecreasing with F.back() ~ 1; piecewise-linear inverse.
    u = std::min(u, F.back());
    auto it = std::lower_bound(F.begin(), F.end(), u);
    int i = static_cast<int>(it - F.begin());
    if (i <= 0) return g.x_lo;
    double f0 = F[i - 1], f1 = F[i];
    if (f1 <= f0) return g.x(i);
    double w = (u - f0) / (f1 - f0);
    return g.x(i - 1) + w * g.dx;
}

}  // namespace

double measure_quantile(const Measure& mu, double u) {
    auto F = cdf_of(mu);
    return quantile(mu.grid, F, u);
}

TransportDistance wasserstein(const Measure& mu, const Measure& nu, int p) {
    if (!mu.grid.same_space(nu.grid))
        throw std::invalid_argument("wasserstein: measures live on different grids");
    if (p != 1 && p != 2) throw std::invalid_argument("wasserstein: p must be 1 or 2");

    auto F = cdf_of(mu);
    auto G = cdf_of(nu);
    const Grid& g = mu.grid;

    if (p == 1) {
        double acc = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            double w = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            acc += w * std::abs(F[i] - G[i]);
        }
        return {1, acc * g.dx};
    }

    constexpr int n_quantiles = 1024;
    double acc = 0.0;
    for (int k = 0; k < n_quantiles; ++k) {
        double u = (k + 0.5) / n_quantiles;
        double d = quantile(g, F, u) - quantile(g, G, u);
        acc += d * d;
    }
    return {2, std::sqrt(acc / n_quantiles)};
}

double sup_wasserstein1(const MeasureFlow& a, const MeasureFlow& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("sup_wasserstein1: flows have different lengths");
    double worst = 0.0;
    for (int k = 0; k < a.size(); ++k)
        worst = std::max(worst, wasserstein(a.at(k), b.at(k), 1).value);
    return worst;
}

HolderReport holder_check(const MeasureFlow& flow, double beta,
                          const std::vector<std::function<double(double)>>& test_fns,
                          double cap) {
    if (test_fns.empty()) throw std::invalid_argument("holder_check: empty test set");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("holder_check: beta must be in (0, 1]");

    const Grid& g = flow.grid;
    // Pairings of measures against each witness, then the worst quotient.
    std::vector<std::vector<double>> integrals(test_fns.size(),
                                               std::vector<double>(flow.size()));
    for (size_t j = 0; j < test_fns.size(); ++j)
        for (int k = 0; k < flow.size(); ++k) {
            double acc = 0.0;
            for (int i = 0; i < g.nx; ++i) acc += test_fns[j](g.x(i)) * flow.at(k).density[i];
            integrals[j][k] = acc * g.dx;
        }

    double worst = 0.0;
    for (size_t j = 0; j < test_fns.size(); ++j)
        for (int k = 0; k < flow.size(); ++k)
            for (int k2 = k + 1; k2 < flow.size(); ++k2) {
                double dt = (k2 - k) * g.dt;
                double q = std::abs(integrals[j][k2] - integrals[j][k]) / std::pow(dt, beta);
                worst = std::max(worst, q);
            }
    return {worst <= cap, worst};
}

std::vector<std::function<double(double)>> default_holder_witnesses(const Grid& grid) {
    std::vector<std::function<double(double)>> fns;
    constexpr int n = 16;
    for (int j = 0; j < n; ++j) {
        double c = grid.x_lo + (j + 0.5) * (grid.x_hi - grid.x_lo) / n;
        fns.push_back([c](double y) { return std::tanh(y - c); });
    }
    return fns;
}

DepositResult empirical_measure(const std::vector<double>& positions, const Grid& grid) {
    if (positions.empty())
        throw std::invalid_argument("empirical_measure: empty position array");
    std::vector<double> d(grid.nx, 0.0);
    int clipped = 0;
    for (double x : positions) {
        if (!std::isfinite(x))
            throw std::invalid_argument("empirical_measure: non-finite position");
        double xq = x;
        if (xq < grid.x_lo) {
            xq = grid.x_lo;
            ++clipped;
        } else if (xq > grid.x_hi) {
            xq = grid.x_hi;
            ++clipped;
        }
        double s = (xq - grid.x_lo) / grid.dx;
        int i = std::min(static_cast<int>(s), grid.nx - 2);
        double w = s - i;
        d[i] += 1.0 - w;
        d[i + 1] += w;
    }
    return {Measure::normalized(grid, std::move(d)), clipped};
}

}  // namespace mfg
