#include "mfg/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {

MeasureFlow forward_flow(const ModelSpec& spec, const BangBangPolicy& policy,
                         const Measure& mu0, const Grid& grid, const MfgOptions& opts) {
    if (opts.forward == MfgOptions::Forward::grid)
        return solve_fokker_planck(spec, policy, mu0, grid).flow;
    return simulate_mckean_vlasov(spec, policy, mu0, opts.n_particles, opts.seed, grid).flow;
}

MeasureFlow mix_flows(const MeasureFlow& fresh, const MeasureFlow& old, double damping) {
    if (damping >= 1.0) return fresh;
    MeasureFlow out = fresh;
    for (int k = 0; k < out.size(); ++k) {
        auto& d = out.steps[k].density;
        const auto& o = old.at(k).density;
        for (size_t i = 0; i < d.size(); ++i)
            d[i] = damping * d[i] + (1.0 - damping) * o[i];
    }
    return out;
}

double geometric_rate(const std::vector<double>& ratios) {
    // Geometric mean of up to the last five ratios.
    int n = static_cast<int>(ratios.size());
    int use = std::min(n, 5);
    if (use == 0) return 0.0;
    double log_acc = 0.0;
    int counted = 0;
    for (int i = n - use; i < n; ++i) {
        if (ratios[i] > 0.0 && std::isfinite(ratios[i])) {
            log_acc += std::log(ratios[i]);
            ++counted;
        }
    }
    return counted == 0 ? 0.0 : std::exp(log_acc / counted);
}

}  // namespace

std::pair<MfgSolution, ContractionReport> solve_mfg(const ModelSpec& spec, const Measure& mu0,
                                                    const Grid& grid, const MfgOptions& opts) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_mfg: tol must be > 0");
    if (opts.max_iter < 1) throw std::invalid_argument("solve_mfg: max_iter must be >= 1");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw std::invalid_argument("solve_mfg: damping must be in (0, 1]");

    MfgSolution sol;
    ContractionReport report;

    MeasureFlow flow = MeasureFlow::constant(grid, mu0);
    double delta0 = 0.0;

    auto sweep = [&](const MeasureFlow& in) {
        sol.value = solve_hjb(spec, in, grid);
        sol.policy = extract_policy(sol.value, spec);
        return forward_flow(spec, sol.policy, mu0, grid, opts);
    };

    // Bootstrap application replacing the artificial constant initial flow;
    // its delta is recorded but does not count toward convergence.
    {
        MeasureFlow first = mix_flows(sweep(flow), flow, opts.damping);
        delta0 = sup_wasserstein1(first, flow);
        report.deltas.push_back(delta0);
        flow = std::move(first);
    }

    DivergenceDetector detector(delta0);
    for (int it = 1; it <= opts.max_iter; ++it) {
        MeasureFlow mixed = mix_flows(sweep(flow), flow, opts.damping);
        double delta = sup_wasserstein1(mixed, flow);
        if (report.deltas.back() > 0.0) report.ratios.push_back(delta / report.deltas.back());
        report.deltas.push_back(delta);

        flow = std::move(mixed);
        sol.iterations = it;
        sol.final_delta = delta;

        if (delta <= opts.tol) {
            sol.converged = true;
            break;
        }
        if (detector.feed(delta)) {
            sol.diverged = true;
            report.diverged = true;
            break;
        }
    }

    report.estimated_contraction = geometric_rate(report.ratios);

    // Mutual consistency of the returned triple: one more backward/forward
    // sweep of the final flow.
    sol.value = solve_hjb(spec, flow, grid);
    sol.policy = extract_policy(sol.value, spec);
    MeasureFlow resweep = forward_flow(spec, sol.policy, mu0, grid, opts);
    sol.self_consistency = sup_wasserstein1(resweep, flow);
    sol.flow = std::move(flow);

    return {std::move(sol), std::move(report)};
}

double contraction_probe(const ModelSpec& spec, const Grid& grid, const Measure& mu0,
                         const MeasureFlow& flow_a, const MeasureFlow& flow_b) {
    double denom = sup_wasserstein1(flow_a, flow_b);
    if (denom < 1e-12)
        throw std::invalid_argument("contraction_probe: flows are identical");

    auto map = [&](const MeasureFlow& flow) {
        auto value = solve_hjb(spec, flow, grid);
        auto policy = extract_policy(value, spec);
        return solve_fokker_planck(spec, policy, mu0, grid).flow;
    };
    double numer = sup_wasserstein1(map(flow_a), map(flow_b));
    return numer / denom;
}

}  // namespace mfg
