#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mfg/hjb.hpp"
#include "mfg/measure.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Monte Carlo particle states with per-particle counter-based noise streams;
// trajectories are bitwise reproducible for a fixed seed under any thread count.
struct ParticleEnsemble {
    std::vector<double> positions;
    int time_index = 0;
    uint64_t seed = 0;
    uint64_t stream_base = 0;  // stream id of particle p is stream_base + p
};

struct FokkerPlanckResult {
    MeasureFlow flow;
    double max_mass_error = 0.0;   // per-step deviation of total mass, pre-clip
    double clipped_mass = 0.0;     // total negative mass clipped to zero
    std::vector<double> mass_error_per_step;
};

// Conservative finite-volume solve of
//   d mu/dt = -d/dx[(b(x,mu) + phi) mu] + sigma^2/2 d2 mu/dx2
// with upwinded advective flux, centered diffusive flux and zero-flux
// (reflecting) boundaries. The drift uses the current-step density.
FokkerPlanckResult solve_fokker_planck(const ModelSpec& spec, const BangBangPolicy& policy,
                                       const Measure& mu0, const Grid& grid);

struct MvOptions {
    double rho = 0.0;  // common-noise correlation in [0, 1]
    std::vector<int> snapshot_times;  // time node indices to keep
};

struct McKeanVlasovResult {
    MeasureFlow flow;
    ParticleEnsemble final_ensemble;
    std::map<int, std::vector<double>> snapshots;
    std::vector<double> mean_path;              // empirical mean per time node
    std::vector<double> common_increments;      // dW0 per step (empty if rho = 0)
    int clipped = 0;                            // deposition clips over all steps
};

// Euler-Maruyama interacting-particle solve of the law under a fixed policy:
// each particle moves by (b(x, mu_hat) + phi(t,x)) dt + sigma (rho dW0 +
// sqrt(1-rho^2) dWi), with mu_hat the deposited empirical measure. Particles
// crossing the domain are reflected, matching the grid solver's boundaries.
McKeanVlasovResult simulate_mckean_vlasov(const ModelSpec& spec, const BangBangPolicy& policy,
                                          const Measure& mu0, int n_particles, uint64_t seed,
                                          const Grid& grid, const MvOptions& opts = {});

struct ForwardCrossCheck {
    std::vector<double> d1_per_time;
    double max_d1 = 0.0;
};

// D1 discrepancy per time node between the grid and particle solvers.
ForwardCrossCheck cross_check_forward(const ModelSpec& spec, const BangBangPolicy& policy,
                                      const Measure& mu0, const Grid& grid, int n_particles,
                                      uint64_t seed);

// Independent draws from mu0 by inverse CDF of per-particle uniforms, keyed
// by (seed, particle); deterministic for a fixed seed.
std::vector<double> sample_initial_positions(const Measure& mu0, int n, uint64_t seed);

}  // namespace mfg
