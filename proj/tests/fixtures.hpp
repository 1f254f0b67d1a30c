#pragma once

// Shared deskscale fixtures for the test suites.

#include "mfg/fixed_point.hpp"
#include "mfg/model.hpp"
#include "mfg/systemic.hpp"

namespace fixtures {

inline mfg::systemic::SystemicRiskParams interbank() {
    return mfg::systemic::SystemicRiskParams{};  // a=1 eps=1 c=1 r=0.1 sigma=0.5 theta=1 T=1 m0=0
}

inline mfg::ModelSpec interbank_spec() { return mfg::systemic::model_spec(interbank()); }

// Coarse grid for fast unit tests (dx = 0.1).
inline mfg::Grid coarse_grid() {
    return mfg::systemic::make_centered_grid(interbank(), 61);
}

// Standard grid for acceptance-scale runs (dx = 0.05).
inline mfg::Grid standard_grid() {
    return mfg::systemic::make_centered_grid(interbank(), 121);
}

// Model without mean-field coupling: drift and cost depend on x only.
inline mfg::ModelSpec no_coupling_spec() {
    mfg::ModelSpec spec;
    spec.b0 = [](double x, double) { return 0.3 - 0.5 * x; };
    spec.f0 = [](double x, double) { return 0.5 * x * x; };
    spec.g1 = [](double) { return 0.2; };
    spec.g2 = [](double) { return 0.2; };
    spec.terminal_cost = [](double) { return 0.0; };
    spec.sigma = 0.5;
    spec.theta = 1.0;
    spec.horizon = 1.0;
    spec.x_lo = -3.0;
    spec.x_hi = 3.0;
    return spec;
}

}  // namespace fixtures
