#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

// Probability measure represented by a nonnegative density on the grid nodes;
// node masses are density * dx and sum to one.
struct Measure {
    Grid grid;
    std::vector<double> density;

    double mass() const;
    double mean() const;
    double variance() const;

    // Validates and rescales so that sum(density) * dx == 1.
    static Measure normalized(const Grid& grid, std::vector<double> density);
    static Measure gaussian(const Grid& grid, double mean, double variance);
    static Measure point_mass(const Grid& grid, double x);
    static Measure uniform(const Grid& grid, double a, double b);
};

void validate_measure(const Measure& mu, double tol = 1e-10);

struct MeasureFlow {
    Grid grid;
    std::vector<Measure> steps;  // one Measure per time node

    const Measure& at(int k) const { return steps[k]; }
    int size() const { return static_cast<int>(steps.size()); }

    std::optional<double> holder_beta;
    std::optional<double> holder_constant;

    static MeasureFlow constant(const Grid& grid, const Measure& mu);
};

struct TransportDistance {
    int p = 1;
    double value = 0.0;
};

// 1-D optimal transport: CDF L1 distance for p=1, quantile L2 distance on
// 1024 uniform quantiles for p=2.
TransportDistance wasserstein(const Measure& mu, const Measure& nu, int p);

// Piecewise-linear inverse of the trapezoidal CDF.
double measure_quantile(const Measure& mu, double u);

double sup_wasserstein1(const MeasureFlow& a, const MeasureFlow& b);

struct HolderReport {
    bool holds = false;
    double constant = 0.0;
};

// Max over time pairs and witness functions of the beta-Holder quotient of
// t -> integral psi d mu_t. Certifies violation only: a fixed witness family
// cannot prove membership in the Holder flow class.
HolderReport holder_check(const MeasureFlow& flow, double beta,
                          const std::vector<std::function<double(double)>>& test_fns,
                          double cap = 1e6);

// 16 capped soft-threshold witnesses at spread locations, each bounded by 1
// with Lipschitz constant <= 1.
std::vector<std::function<double(double)>> default_holder_witnesses(const Grid& grid);

struct DepositResult {
    Measure measure;
    int clipped = 0;
};

// Linear (cloud-in-cell) deposition of particle positions, normalized.
// Positions outside the domain are clipped to the boundary nodes and counted.
DepositResult empirical_measure(const std::vector<double>& positions, const Grid& grid);

}  // namespace mfg
