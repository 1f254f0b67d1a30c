#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/measure.hpp"

namespace mfg {

using Kernel = std::function<double(double, double)>;
using ScalarFn = std::function<double(double)>;

// Tabulated kernel on an (x, y) grid with bilinear interpolation, clamped
// outside the table range.
struct Table2d {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values;  // row-major, xs.size() * ys.size()

    double operator()(double x, double y) const;
};

struct Table1d {
    std::vector<double> xs;
    std::vector<double> values;

    double operator()(double x) const;
};

// Problem data for the mean field game with velocity-bounded controls.
//
// The running cost takes either the kernel form f(x,mu) = integral of
// f0(x,y) mu(dy), or a mean-functional form f(x, mean(mu)); the interbank
// family uses the latter while keeping the kernel available for the
// finite-player game.
struct ModelSpec {
    Kernel b0;  // drift kernel b0(x, y)
    Kernel f0;  // running-cost kernel f0(x, y)
    ScalarFn g1;
    ScalarFn g2;
    ScalarFn terminal_cost;
    std::function<double(double, double)> f_mean;  // f(x, mean(mu))
    // Terminal cost against the population mean, used by the finite-player
    // game when the running cost is mean-functional.
    std::function<double(double, double)> terminal_mean;
    bool f_uses_mean = false;

    double sigma = 1.0;
    double theta = 0.0;
    double horizon = 1.0;
    double x_lo = -1.0;
    double x_hi = 1.0;

    std::string family;
    std::map<std::string, double> params;

    double param(const std::string& key) const;
};

struct ModelConfig {
    std::string family;  // "systemic_risk" | "zero" | "tabulated"
    std::map<std::string, double> params;
    std::optional<Table2d> b0_table;
    std::optional<Table2d> f0_table;
    std::optional<Table1d> g1_table;
    std::optional<Table1d> g2_table;
    std::optional<Table1d> terminal_table;
};

struct LipschitzEstimates {
    double b0_in_x = 0.0;
    double b0_in_y = 0.0;
    double f0_in_x = 0.0;
    double f0_in_y = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    double b0_bound = 0.0;
    double f0_bound = 0.0;
};

struct PolicyMonotonicityVerdict {
    std::string label;
    bool monotone = false;
};

// Numerical report on the standing assumptions over the truncated domain.
// Lipschitz/boundedness estimates are reported, not enforced.
struct AssumptionReport {
    bool a3_ok = false;
    double min_g_sum = 0.0;
    LipschitzEstimates lipschitz;
    std::vector<PolicyMonotonicityVerdict> a4_checked_policies;
};

ModelSpec build_model(const ModelConfig& config);

AssumptionReport check_assumptions(const ModelSpec& spec, const Grid& grid);

struct MeanFieldCoeffs {
    double b = 0.0;
    double f = 0.0;
};

// b(x,mu) and f(x,mu) by midpoint quadrature against the grid density.
MeanFieldCoeffs mean_field_coeffs(const ModelSpec& spec, double x, const Measure& mu);

// Coefficient profiles over all spatial nodes (the hot path for the solvers).
std::vector<double> drift_profile(const ModelSpec& spec, const Measure& mu);
std::vector<double> cost_profile(const ModelSpec& spec, const Measure& mu);

// Sampled bound on |b0| over the grid, used by the CFL rule.
double drift_bound(const ModelSpec& spec, int samples = 201);

// Explicit-scheme stability limit: dt <= dx^2 / (sigma^2 + dx (B + theta)).
double cfl_max_dt(const ModelSpec& spec, double dx);

// Smallest admissible time node count for an nx-node grid.
int cfl_time_nodes(const ModelSpec& spec, int nx);

// Grid over the model's domain and horizon; throws if the CFL bound fails.
Grid make_model_grid(const ModelSpec& spec, int nx, int nt);

// Fraction of mass within `band` nodes of either boundary, maximised over the
// flow; the CLI warns when it exceeds 1e-3.
double boundary_mass(const MeasureFlow& flow, int band = 5);

}  // namespace mfg
