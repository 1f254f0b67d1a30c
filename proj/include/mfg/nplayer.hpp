#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfg/fixed_point.hpp"
#include "mfg/hjb.hpp"
#include "mfg/model.hpp"

namespace mfg {

// One replication of the symmetric N-player game.
struct GameRun {
    int n_players = 0;
    int nt = 0;
    std::vector<double> trajectories;  // n_players * nt
    std::vector<double> costs;         // realized J_i per player
    uint64_t seed = 0;

    double traj(int i, int k) const { return trajectories[static_cast<size_t>(i) * nt + k]; }
};

struct NPlayerOptions {
    double x0 = 0.0;      // common start
    int nt_sim = 0;       // 0 = use the policy grid's time nodes
    // Optional noise-stream relabeling (size N); exchangeability means a
    // permutation here permutes the realized costs.
    std::vector<uint64_t> stream_ids;
};

struct NPlayerStats {
    int n_players = 0;
    int n_rep = 0;
    double mean_cost = 0.0;
    double std_error = 0.0;          // of the per-replication mean cost
    std::vector<double> rep_mean_costs;
};

// Euler-Maruyama on dx_i = [(1/N) sum_j b0(x_i, x_j) + phi_i(x_i)] dt + sigma dW_i
// with the per-player running cost integrated by the trapezoid rule.
// For mean-functional specs the running cost is f(x_i, empirical mean), the
// finite-player form of the interbank model.
GameRun simulate_nplayer_once(const ModelSpec& spec,
                              const std::vector<const BangBangPolicy*>& policies,
                              uint64_t seed, const NPlayerOptions& opts = {});

NPlayerStats simulate_nplayer(const ModelSpec& spec, const BangBangPolicy& shared_policy,
                              int n_players, int n_rep, uint64_t seed,
                              const NPlayerOptions& opts = {});

struct CouplingGapStats {
    int n_players = 0;
    int n_rep = 0;
    std::vector<double> rep_mean_sq_gap;  // mean over players of sup_t gap^2
    std::vector<double> rep_p95_sq_gap;
    double mean_sq_gap = 0.0;
    double p95_sq_gap = 0.0;
};

// Couples the limit dynamics (drift from the solved flow) with the N-player
// dynamics under identical per-player Brownian increments and reports
// sup_t |x_i - x_hat_i| statistics.
CouplingGapStats coupling_gap(const ModelSpec& spec, const BangBangPolicy& policy,
                              const MeasureFlow& flow, int n_players, int n_rep,
                              uint64_t seed, const NPlayerOptions& opts = {});

struct NashGapEstimate {
    double epsilon_hat = 0.0;  // best found unilateral improvement, clipped at 0
    double std_error = 0.0;
    int n_players = 0;
    std::string deviation_descriptor;
    std::vector<double> deviation_means;  // paired-mean improvement per candidate
};

struct NashGapOptions {
    NPlayerOptions sim;
    int deviation_budget = 6;
    bool include_best_response = true;
    int deviating_player = 0;
};

// Player `deviating_player` deviates while everyone else keeps the
// equilibrium policy; deviations are the best response against the solved
// flow plus perturbed-threshold policies, costed with paired seeds.
NashGapEstimate nash_gap(const ModelSpec& spec, const MfgSolution& solution, int n_players,
                         int n_rep, uint64_t seed, const NashGapOptions& opts = {});

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool degenerate = false;  // all values clipped / zero
};

// Least-squares fit of log(value) against log(N).
ScalingFit scaling_fit(const std::vector<double>& n_values, const std::vector<double>& values);

}  // namespace mfg
