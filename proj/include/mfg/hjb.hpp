#pragma once

#include <vector>

#include "mfg/grid.hpp"
#include "mfg/measure.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Value function v(t, x) on the grid, solved backward for a frozen flow.
struct ValueField {
    Grid grid;
    std::vector<double> values;  // nt * nx, row-major in time

    double at(int k, int i) const { return values[static_cast<size_t>(k) * grid.nx + i]; }
    double& at(int k, int i) { return values[static_cast<size_t>(k) * grid.nx + i]; }

    // Gradient used for policy extraction: centered at interior nodes,
    // one-sided at the boundaries.
    double gradient(int k, int i) const;
};

// Three-valued feedback control with per-time free boundaries.
// lower/upper are the threshold coordinates (NaN when the segment is absent);
// action reads +theta, 0, -theta as x increases.
struct BangBangPolicy {
    Grid grid;
    double theta = 0.0;
    std::vector<double> action;  // nt * nx
    std::vector<double> lower_boundary;  // per time node, NaN = none
    std::vector<double> upper_boundary;
    bool a4_ok = true;
    int a4_violations = 0;

    double at(int k, int i) const { return action[static_cast<size_t>(k) * grid.nx + i]; }
    double& at(int k, int i) { return action[static_cast<size_t>(k) * grid.nx + i]; }

    // Action at an arbitrary (t, x): nearest time row, nearest spatial node.
    double value_at(double t, double x) const {
        int k = grid.nearest_time(t);
        return at(k, grid.nearest_node(x));
    }

    static BangBangPolicy zero(const Grid& grid);
    // Policy with the three-region form: +theta below `lower`, -theta above
    // `upper`, 0 between (per time node).
    static BangBangPolicy from_thresholds(const Grid& grid, double theta,
                                          const std::vector<double>& lower,
                                          const std::vector<double>& upper);
};

// Rationality check: action nonincreasing in x at every time node.
bool policy_monotone(const BangBangPolicy& policy, int slack_nodes = 0);

// min{(p + g1) theta, (-p + g2) theta, 0}: the control part of the
// Hamiltonian as an exact minimum over the control box vertices.
double bang_bang_hamiltonian(double p, double g1, double g2, double theta);

// Explicit monotone backward solve of
//   -dv/dt = min{(v_x + g1) th, (-v_x + g2) th, 0} + b v_x + f + sigma^2/2 v_xx
// with upwind advection per control branch and centered diffusion.
ValueField solve_hjb(const ModelSpec& spec, const MeasureFlow& flow, const Grid& grid);

BangBangPolicy extract_policy(const ValueField& value, const ModelSpec& spec);

struct ResidualField {
    int nt_rows = 0;  // nt - 1
    int nx_cols = 0;  // nx - 2 (interior nodes)
    std::vector<double> values;
    double max_norm = 0.0;
};

// Discrete residual of the scheme's own recursion, interior nodes only.
ResidualField hjb_residual(const ValueField& value, const ModelSpec& spec,
                           const MeasureFlow& flow);

}  // namespace mfg
