#include "mfg/nplayer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg {

namespace {

struct SimTimes {
    int nt = 0;
    double dt = 0.0;
};

SimTimes sim_times(const Grid& grid, const NPlayerOptions& opts) {
    int nt = opts.nt_sim > 0 ? opts.nt_sim : grid.nt;
    return {nt, grid.horizon / (nt - 1)};
}

double mean_of(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / x.size();
}

double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (v.size() - 1) / v.size());
}

// Per-player interaction terms: drift (1/N) sum_j b0(x_i, x_j) and the
// running-cost term, mean-functional or kernel-averaged.
void interaction_terms(const ModelSpec& spec, const std::vector<double>& x,
                       std::vector<double>& drift, std::vector<double>& cost) {
    const int n = static_cast<int>(x.size());
    double m_hat = mean_of(x);
    parallel_for(n, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            double bi = 0.0;
            for (int j = 0; j < n; ++j) bi += spec.b0(x[i], x[j]);
            drift[i] = bi / n;
            if (spec.f_uses_mean) {
                cost[i] = spec.f_mean(x[i], m_hat);
            } else {
                double fi = 0.0;
                for (int j = 0; j < n; ++j) fi += spec.f0(x[i], x[j]);
                cost[i] = fi / n;
            }
        }
    });
}

}  // namespace

GameRun simulate_nplayer_once(const ModelSpec& spec,
                              const std::vector<const BangBangPolicy*>& policies,
                              uint64_t seed, const NPlayerOptions& opts) {
    const int n = static_cast<int>(policies.size());
    if (n < 2) throw std::invalid_argument("simulate_nplayer: need at least 2 players");
    const Grid& grid = policies[0]->grid;
    for (const auto* p : policies)
        if (!p->grid.same_axes(grid))
            throw std::invalid_argument("simulate_nplayer: policies on different grids");

    auto [nt, dt] = sim_times(grid, opts);
    const double sqrt_dt = std::sqrt(dt);

    GameRun run;
    run.n_players = n;
    run.nt = nt;
    run.seed = seed;
    run.trajectories.assign(static_cast<size_t>(n) * nt, opts.x0);
    run.costs.assign(n, 0.0);

    std::vector<double> x(n, opts.x0), drift(n), fcost(n), rate_prev(n), u(n);

    auto control_cost = [&](int i, double t) {
        double ui = policies[i]->value_at(t, x[i]);
        u[i] = ui;
        double up = std::max(ui, 0.0), dn = std::max(-ui, 0.0);
        return spec.g1(x[i]) * up + spec.g2(x[i]) * dn;
    };

    interaction_terms(spec, x, drift, fcost);
    for (int i = 0; i < n; ++i) rate_prev[i] = fcost[i] + control_cost(i, 0.0);

    for (int k = 0; k + 1 < nt; ++k) {
        parallel_for(n, [&](int begin, int end) {
            for (int i = begin; i < end; ++i) {
                uint64_t stream = opts.stream_ids.empty() ? static_cast<uint64_t>(i)
                                                          : opts.stream_ids[i];
                double z = rng::normal(seed, stream, static_cast<uint64_t>(k));
                x[i] += (drift[i] + u[i]) * dt + spec.sigma * sqrt_dt * z;
            }
        });
        interaction_terms(spec, x, drift, fcost);
        double t_next = (k + 1) * dt;
        for (int i = 0; i < n; ++i) {
            double rate = fcost[i] + control_cost(i, t_next);
            run.costs[i] += 0.5 * (rate_prev[i] + rate) * dt;
            rate_prev[i] = rate;
            run.trajectories[static_cast<size_t>(i) * nt + (k + 1)] = x[i];
        }
    }
    double m_final = mean_of(x);
    for (int i = 0; i < n; ++i) {
        if (spec.f_uses_mean && spec.terminal_mean)
            run.costs[i] += spec.terminal_mean(x[i], m_final);
        else if (spec.terminal_cost)
            run.costs[i] += spec.terminal_cost(x[i]);
    }
    return run;
}

// Replication seeds are decorrelated across player counts so that per-N
// estimates entering a scaling fit carry independent noise.
static uint64_t rep_seed(uint64_t seed, int n_players, int rep) {
    return rng::derive_seed(seed, static_cast<uint64_t>(n_players) * 0x100000001ull + rep);
}

NPlayerStats simulate_nplayer(const ModelSpec& spec, const BangBangPolicy& shared_policy,
                              int n_players, int n_rep, uint64_t seed,
                              const NPlayerOptions& opts) {
    std::vector<const BangBangPolicy*> policies(n_players, &shared_policy);
    NPlayerStats stats;
    stats.n_players = n_players;
    stats.n_rep = n_rep;
    stats.rep_mean_costs.reserve(n_rep);
    for (int r = 0; r < n_rep; ++r) {
        auto run = simulate_nplayer_once(spec, policies, rep_seed(seed, n_players, r), opts);
        stats.rep_mean_costs.push_back(mean_of(run.costs));
    }
    stats.mean_cost = mean_of(stats.rep_mean_costs);
    stats.std_error = stderr_of(stats.rep_mean_costs);
    return stats;
}

CouplingGapStats coupling_gap(const ModelSpec& spec, const BangBangPolicy& policy,
                              const MeasureFlow& flow, int n_players, int n_rep,
                              uint64_t seed, const NPlayerOptions& opts) {
    if (flow.size() != flow.grid.nt)
        throw std::invalid_argument("coupling_gap: flow must cover every time node");
    const Grid& grid = policy.grid;
    auto [nt, dt] = sim_times(grid, opts);
    const double sqrt_dt = std::sqrt(dt);

    // Limit-dynamics drift on the grid per flow time node.
    std::vector<std::vector<double>> bgrid(flow.size());
    for (int k = 0; k < flow.size(); ++k) bgrid[k] = drift_profile(spec, flow.at(k));

    CouplingGapStats stats;
    stats.n_players = n_players;
    stats.n_rep = n_rep;

    for (int r = 0; r < n_rep; ++r) {
        uint64_t rseed = rep_seed(seed, n_players, r);
        std::vector<double> x(n_players, opts.x0), xh(n_players, opts.x0);
        std::vector<double> gap_sq(n_players, 0.0), drift_h(n_players), cost_dummy(n_players);

        for (int k = 0; k + 1 < nt; ++k) {
            double t = k * dt;
            int kf = flow.grid.nearest_time(t);
            interaction_terms(spec, xh, drift_h, cost_dummy);
            parallel_for(n_players, [&](int begin, int end) {
                for (int i = begin; i < end; ++i) {
                    double z = rng::normal(rseed, static_cast<uint64_t>(i),
                                           static_cast<uint64_t>(k));
                    double noise = spec.sigma * sqrt_dt * z;
                    double bx = interp_nodes(grid, bgrid[kf], x[i]);
                    x[i] += (bx + policy.value_at(t, x[i])) * dt + noise;
                    xh[i] += (drift_h[i] + policy.value_at(t, xh[i])) * dt + noise;
                    double g = x[i] - xh[i];
                    gap_sq[i] = std::max(gap_sq[i], g * g);
                }
            });
        }
        double mean_gap = mean_of(gap_sq);
        std::vector<double> sorted = gap_sq;
        std::sort(sorted.begin(), sorted.end());
        double p95 = sorted[static_cast<size_t>(0.95 * (n_players - 1))];
        stats.rep_mean_sq_gap.push_back(mean_gap);
        stats.rep_p95_sq_gap.push_back(p95);
    }
    stats.mean_sq_gap = mean_of(stats.rep_mean_sq_gap);
    stats.p95_sq_gap = mean_of(stats.rep_p95_sq_gap);
    return stats;
}

namespace {

// Threshold-perturbed deviations around the equilibrium policy: widen,
// shrink, and translate the inaction region by node multiples. Fractional
// widenings keep a profitable candidate alive at large N, where the optimal
// extra width shrinks with the empirical-mean fluctuations.
std::vector<std::pair<std::string, BangBangPolicy>> threshold_deviations(
    const BangBangPolicy& base, int budget) {
    std::vector<std::pair<std::string, BangBangPolicy>> out;
    const Grid& g = base.grid;
    const std::vector<std::pair<std::string, std::pair<double, double>>> moves = {
        {"widen+0.5", {-0.5, 0.5}},   {"widen+1", {-1.0, 1.0}},
        {"widen+0.25", {-0.25, 0.25}}, {"widen+2", {-2.0, 2.0}},
        {"shrink-1", {1.0, -1.0}},    {"shift+1", {1.0, 1.0}},
        {"shift-1", {-1.0, -1.0}},    {"widen+4", {-4.0, 4.0}},
        {"shrink-2", {2.0, -2.0}},    {"shift+2", {2.0, 2.0}}};
    for (const auto& [label, mv] : moves) {
        if (static_cast<int>(out.size()) >= budget) break;
        std::vector<double> lo = base.lower_boundary, hi = base.upper_boundary;
        for (int k = 0; k < g.nt; ++k) {
            lo[k] += mv.first * g.dx;
            hi[k] += mv.second * g.dx;
            if (!std::isnan(lo[k]) && !std::isnan(hi[k]) && lo[k] > hi[k]) {
                double mid = 0.5 * (lo[k] + hi[k]);
                lo[k] = hi[k] = mid;
            }
        }
        out.emplace_back(label, BangBangPolicy::from_thresholds(g, base.theta, lo, hi));
    }
    return out;
}

}  // namespace

NashGapEstimate nash_gap(const ModelSpec& spec, const MfgSolution& solution, int n_players,
                         int n_rep, uint64_t seed, const NashGapOptions& opts) {
    if (!solution.converged)
        throw std::invalid_argument("nash_gap: needs a converged equilibrium solution");
    const BangBangPolicy& eq = solution.policy;
    const int dev_player = opts.deviating_player;

    std::vector<std::pair<std::string, BangBangPolicy>> deviations;
    if (opts.include_best_response) {
        auto value = solve_hjb(spec, solution.flow, eq.grid);
        deviations.emplace_back("best_response", extract_policy(value, spec));
    }
    for (auto& d : threshold_deviations(eq, opts.deviation_budget))
        deviations.push_back(std::move(d));

    NashGapEstimate est;
    est.n_players = n_players;
    est.deviation_descriptor = "none";
    if (deviations.empty()) return est;

    std::vector<std::vector<double>> improvements(deviations.size());

    // Paired seeds: the baseline and every deviation replay the same noise.
    for (int r = 0; r < n_rep; ++r) {
        uint64_t rseed = rep_seed(seed, n_players, r);
        std::vector<const BangBangPolicy*> profile(n_players, &eq);
        double base_cost =
            simulate_nplayer_once(spec, profile, rseed, opts.sim).costs[dev_player];
        for (size_t d = 0; d < deviations.size(); ++d) {
            profile[dev_player] = &deviations[d].second;
            double dev_cost =
                simulate_nplayer_once(spec, profile, rseed, opts.sim).costs[dev_player];
            improvements[d].push_back(base_cost - dev_cost);
            profile[dev_player] = &eq;
        }
    }

    double best = 0.0, best_se = 0.0;
    std::string best_label = "none";
    for (size_t d = 0; d < deviations.size(); ++d) {
        double m = mean_of(improvements[d]);
        est.deviation_means.push_back(m);
        if (m > best) {
            best = m;
            best_se = stderr_of(improvements[d]);
            best_label = deviations[d].first;
        }
    }
    est.epsilon_hat = std::max(0.0, best);
    est.std_error = best_se;
    est.deviation_descriptor = best_label;
    return est;
}

ScalingFit scaling_fit(const std::vector<double>& n_values, const std::vector<double>& values) {
    if (n_values.size() != values.size())
        throw std::invalid_argument("scaling_fit: size mismatch");
    if (n_values.size() < 3) throw std::invalid_argument("scaling_fit: need at least 3 points");

    std::vector<double> lx, ly;
    bool any_positive = false;
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i] > 0.0) {
            any_positive = true;
            lx.push_back(std::log(n_values[i]));
            ly.push_back(std::log(values[i]));
        }
    }
    ScalingFit fit;
    if (!any_positive) {
        fit.degenerate = true;
        return fit;
    }
    if (lx.size() < 3)
        throw std::invalid_argument("scaling_fit: fewer than 3 positive values after clipping");

    double mx = mean_of(lx), my = mean_of(ly);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
    return fit;
}

}  // namespace mfg
