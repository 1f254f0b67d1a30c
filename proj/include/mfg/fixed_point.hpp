#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mfg/forward.hpp"
#include "mfg/hjb.hpp"
#include "mfg/measure.hpp"
#include "mfg/model.hpp"

namespace mfg {

struct MfgSolution {
    BangBangPolicy policy;
    MeasureFlow flow;
    ValueField value;
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    double final_delta = 0.0;
    // sup_t D1 between the flow and one more forward/backward sweep of it.
    double self_consistency = 0.0;
};

struct ContractionReport {
    std::vector<double> deltas;  // delta_k = sup_t D1(flow_k, flow_{k+1})
    std::vector<double> ratios;  // delta_{k+1} / delta_k
    double estimated_contraction = 0.0;  // geometric fit over the last ratios
    bool diverged = false;
};

// Blow-up rule for the Picard loop: a delta exceeding ten times the
// bootstrap delta three times in a row declares divergence.
class DivergenceDetector {
  public:
    explicit DivergenceDetector(double delta0) : delta0_(delta0) {}
    bool feed(double delta) {
        if (delta0_ > 0.0 && delta > 10.0 * delta0_)
            ++strikes_;
        else
            strikes_ = 0;
        return strikes_ >= 3;
    }

  private:
    double delta0_;
    int strikes_ = 0;
};

struct MfgOptions {
    double tol = 1e-3;
    int max_iter = 50;
    double damping = 1.0;  // 1 = pure Picard
    enum class Forward { grid, particles } forward = Forward::grid;
    int n_particles = 20000;
    uint64_t seed = 1;
};

// Picard iteration of flow -> forward(policy(flow)) from the constant-in-time
// initial flow. Aborts (diverged flag, no throw) when delta_k exceeds ten
// times delta_0 three times in a row.
std::pair<MfgSolution, ContractionReport> solve_mfg(const ModelSpec& spec, const Measure& mu0,
                                                    const Grid& grid, const MfgOptions& opts = {});

// Empirical one-step Lipschitz constant of the iteration map:
// sup_t D1(T(flow_a), T(flow_b)) / sup_t D1(flow_a, flow_b), where T composes
// the backward and forward solves starting from mu0.
double contraction_probe(const ModelSpec& spec, const Grid& grid, const Measure& mu0,
                         const MeasureFlow& flow_a, const MeasureFlow& flow_b);

}  // namespace mfg
