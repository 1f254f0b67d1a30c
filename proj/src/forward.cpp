#include "mfg/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg {

namespace {

// Step index reserved for drawing initial positions.
constexpr uint64_t kInitStep = 0xFFFFFFFFull;

// Reflects x into [lo, hi].
inline double reflect(double x, double lo, double hi) {
    while (x < lo || x > hi) {
        if (x < lo) x = 2.0 * lo - x;
        if (x > hi) x = 2.0 * hi - x;
    }
    return x;
}

}  // namespace

FokkerPlanckResult solve_fokker_planck(const ModelSpec& spec, const BangBangPolicy& policy,
                                       const Measure& mu0, const Grid& grid) {
    if (!policy.grid.same_axes(grid))
        throw std::invalid_argument("solve_fokker_planck: policy grid mismatch");
    if (!mu0.grid.same_space(grid))
        throw std::invalid_argument("solve_fokker_planck: mu0 grid mismatch");
    if (grid.dt > cfl_max_dt(spec, grid.dx) * (1.0 + 1e-12))
        throw std::invalid_argument("solve_fokker_planck: CFL violated");
    validate_measure(mu0);

    const int nx = grid.nx, nt = grid.nt;
    const double dx = grid.dx, dt = grid.dt;
    const double half_sig2 = 0.5 * spec.sigma * spec.sigma;

    FokkerPlanckResult out;
    out.flow.grid = grid;
    out.flow.steps.reserve(nt);
    Measure cur = mu0;
    cur.grid = grid;
    out.flow.steps.push_back(cur);
    out.mass_error_per_step.reserve(nt - 1);

    std::vector<double> flux(nx - 1), next(nx);
    for (int k = 0; k + 1 < nt; ++k) {
        for (int i = 0; i + 1 < nx; ++i) {
            double xi = grid.x(i) + 0.5 * dx;
            // Interface drift: kernel at the midpoint against the current
            // density plus the averaged node actions.
            double acc = 0.0;
            for (int j = 0; j < nx; ++j) {
                double w = cur.density[j];
                if (w != 0.0) acc += spec.b0(xi, grid.x(j)) * w;
            }
            double w_adv = acc * dx + 0.5 * (policy.at(k, i) + policy.at(k, i + 1));
            double rho_up = w_adv > 0.0 ? cur.density[i] : cur.density[i + 1];
            flux[i] = w_adv * rho_up - half_sig2 * (cur.density[i + 1] - cur.density[i]) / dx;
        }

        double mass_before = 0.0, mass_after = 0.0, clipped = 0.0;
        for (int i = 0; i < nx; ++i) {
            double f_right = i + 1 < nx ? flux[i] : 0.0;
            double f_left = i > 0 ? flux[i - 1] : 0.0;
            next[i] = cur.density[i] - dt / dx * (f_right - f_left);
            mass_before += cur.density[i];
            mass_after += next[i];
        }
        out.mass_error_per_step.push_back(std::abs(mass_after - mass_before) * dx);
        out.max_mass_error = std::max(out.max_mass_error, out.mass_error_per_step.back());
        for (int i = 0; i < nx; ++i) {
            if (next[i] < 0.0) {
                if (next[i] < -1e-13)
                    throw std::runtime_error("solve_fokker_planck: density fell below -1e-13");
                clipped -= next[i];
                next[i] = 0.0;
            }
        }
        out.clipped_mass += clipped * dx;
        cur.density = next;
        out.flow.steps.push_back(cur);
    }
    return out;
}

std::vector<double> sample_initial_positions(const Measure& mu0, int n, uint64_t seed) {
    std::vector<double> x(n);
    for (int p = 0; p < n; ++p) {
        double u = rng::uniform_pair(seed, static_cast<uint64_t>(p), kInitStep)[0];
        x[p] = measure_quantile(mu0, u);
    }
    return x;
}

McKeanVlasovResult simulate_mckean_vlasov(const ModelSpec& spec, const BangBangPolicy& policy,
                                          const Measure& mu0, int n_particles, uint64_t seed,
                                          const Grid& grid, const MvOptions& opts) {
    if (n_particles < 2)
        throw std::invalid_argument("simulate_mckean_vlasov: need at least 2 particles");
    if (opts.rho < 0.0 || opts.rho > 1.0)
        throw std::invalid_argument("simulate_mckean_vlasov: rho must be in [0, 1]");
    if (!policy.grid.same_axes(grid))
        throw std::invalid_argument("simulate_mckean_vlasov: policy grid mismatch");
    validate_measure(mu0);

    const int nt = grid.nt;
    const double dt = grid.dt, sqrt_dt = std::sqrt(dt);
    const double sig_common = spec.sigma * opts.rho;
    const double sig_idio = spec.sigma * std::sqrt(1.0 - opts.rho * opts.rho);

    McKeanVlasovResult out;
    out.flow.grid = grid;
    out.flow.steps.reserve(nt);
    out.mean_path.reserve(nt);

    std::vector<double> x = sample_initial_positions(mu0, n_particles, seed);
    for (auto& xi : x) xi = reflect(xi, grid.x_lo, grid.x_hi);

    auto record = [&](int k) {
        auto dep = empirical_measure(x, grid);
        out.clipped += dep.clipped;
        out.flow.steps.push_back(dep.measure);
        double m = 0.0;
        for (double xi : x) m += xi;
        out.mean_path.push_back(m / n_particles);
        if (std::find(opts.snapshot_times.begin(), opts.snapshot_times.end(), k) !=
            opts.snapshot_times.end())
            out.snapshots[k] = x;
    };
    record(0);

    std::vector<double> bgrid;
    for (int k = 0; k + 1 < nt; ++k) {
        bgrid = drift_profile(spec, out.flow.steps[k]);
        double dW0 = 0.0;
        if (opts.rho > 0.0) {
            dW0 = sqrt_dt * rng::normal(seed, rng::kCommonStream, static_cast<uint64_t>(k));
            out.common_increments.push_back(dW0);
        }
        const double common_shift = sig_common * dW0;
        parallel_for(n_particles, [&](int begin, int end) {
            for (int p = begin; p < end; ++p) {
                double xi = x[p];
                double drift = interp_nodes(grid, bgrid, xi) +
                               policy.at(k, grid.nearest_node(xi));
                double z = rng::normal(seed, static_cast<uint64_t>(p), static_cast<uint64_t>(k));
                double xn = xi + drift * dt + common_shift + sig_idio * sqrt_dt * z;
                x[p] = reflect(xn, grid.x_lo, grid.x_hi);
            }
        });
        record(k + 1);
    }

    out.final_ensemble = ParticleEnsemble{std::move(x), nt - 1, seed, 0};
    return out;
}

ForwardCrossCheck cross_check_forward(const ModelSpec& spec, const BangBangPolicy& policy,
                                      const Measure& mu0, const Grid& grid, int n_particles,
                                      uint64_t seed) {
    auto fp = solve_fokker_planck(spec, policy, mu0, grid);
    auto mv = simulate_mckean_vlasov(spec, policy, mu0, n_particles, seed, grid);
    ForwardCrossCheck out;
    out.d1_per_time.reserve(grid.nt);
    for (int k = 0; k < grid.nt; ++k) {
        double d = wasserstein(fp.flow.at(k), mv.flow.at(k), 1).value;
        out.d1_per_time.push_back(d);
        out.max_d1 = std::max(out.max_d1, d);
    }
    return out;
}

}  // namespace mfg
