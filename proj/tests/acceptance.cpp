// Acceptance suite: one check per release criterion, each printing a single
// pass/fail line. Usage: acceptance [n ...] runs the numbered checks (all by
// default); the exit code is the number of failures.

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mfg/csv.hpp"
#include "mfg/fixed_point.hpp"
#include "mfg/forward.hpp"
#include "mfg/hjb.hpp"
#include "mfg/measure.hpp"
#include "mfg/model.hpp"
#include "mfg/nplayer.hpp"
#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"
#include "mfg/systemic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mfg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) { return csv::format_double(v); }

// 1. Uncontrolled backward solve against a Feynman-Kac Monte Carlo oracle at
//    five probe points (3 standard errors), plus a refinement study with
//    fitted convergence order >= 1 in dx.
Outcome criterion_value_function() {
    auto p = fixtures::interbank();
    p.theta = 0.0;
    ModelSpec spec = systemic::model_spec(p);
    spec.theta = 0.0;

    const std::vector<double> probes = {-1.0, -0.5, 0.0, 0.5, 1.0};
    std::vector<oracle::MonteCarloValue> mc;
    for (size_t i = 0; i < probes.size(); ++i)
        mc.push_back(oracle::feynman_kac_ou(p.a, p.eps, p.c, p.sigma, p.m0, p.horizon,
                                            probes[i], 200, 100000, 1000 + i));

    Grid fine = systemic::make_centered_grid(p, 1601);
    auto flow = MeasureFlow::constant(fine, Measure::point_mass(fine, p.m0));
    auto v = solve_hjb(spec, flow, fine);

    double worst_sigmas = 0.0;
    for (size_t i = 0; i < probes.size(); ++i) {
        double diff = std::abs(v.at(0, fine.nearest_node(probes[i])) - mc[i].mean);
        worst_sigmas = std::max(worst_sigmas, diff / mc[i].std_error);
    }

    std::vector<double> dxs, errs;
    for (int nx : {31, 61, 121}) {
        Grid g = systemic::make_centered_grid(p, nx);
        auto f = MeasureFlow::constant(g, Measure::point_mass(g, p.m0));
        auto vg = solve_hjb(spec, f, g);
        double err = 0.0;
        for (size_t i = 0; i < probes.size(); ++i)
            err = std::max(err, std::abs(vg.at(0, g.nearest_node(probes[i])) - mc[i].mean));
        dxs.push_back(g.dx);
        errs.push_back(err);
    }
    double order = oracle::loglog_slope(dxs, errs);

    bool pass = worst_sigmas <= 3.0 && order >= 1.0;
    return {pass, "worst probe deviation " + fmt(worst_sigmas) + " sigma (<= 3), fitted order " +
                      fmt(order) + " (>= 1)"};
}

// 2. Three-branch control minimum vs brute force over a 101 x 101 grid of
//    rate pairs, 1000 random configurations, tolerance 1e-9.
Outcome criterion_hamiltonian() {
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto u = rng::uniform_pair(5150, trial, 0);
        auto w = rng::uniform_pair(5150, trial, 1);
        double p = 8.0 * (u[0] - 0.5);
        double g1 = 2.0 * u[1] - 0.5;
        double g2 = std::max(-g1, 0.0) + 2.0 * w[0];
        double theta = 2.0 * w[1];
        double fast = bang_bang_hamiltonian(p, g1, g2, theta);
        double brute = std::numeric_limits<double>::infinity();
        for (int iu = 0; iu <= 100; ++iu)
            for (int id = 0; id <= 100; ++id)
                brute = std::min(brute, (p + g1) * (theta * iu / 100.0) +
                                            (-p + g2) * (theta * id / 100.0));
        worst = std::max(worst, std::abs(fast - brute));
    }
    return {worst <= 1e-9, "max |three-branch - brute force| = " + fmt(worst) + " (<= 1e-9)"};
}

// 3. Grid transport vs a 1e5-particle interacting simulation on the standard
//    fixture: max_t D1 <= 0.02 and per-step mass error <= 1e-10.
Outcome criterion_forward_equivalence() {
    auto p = fixtures::interbank();
    Grid g = systemic::make_centered_grid(p, 161);
    auto sol = systemic::solve_systemic_hjb(p, g);
    auto spec = fixtures::interbank_spec();
    auto mu0 = Measure::gaussian(g, 0.0, 0.25);

    auto fp = solve_fokker_planck(spec, sol.policy, mu0, g);
    auto mv = simulate_mckean_vlasov(spec, sol.policy, mu0, 100000, 2024, g);
    double max_d1 = 0.0;
    for (int k = 0; k < g.nt; ++k)
        max_d1 = std::max(max_d1, wasserstein(fp.flow.at(k), mv.flow.at(k), 1).value);

    bool pass = max_d1 <= 0.02 && fp.max_mass_error <= 1e-10;
    return {pass, "max_t D1 = " + fmt(max_d1) + " (<= 0.02), worst mass error " +
                      fmt(fp.max_mass_error) + " (<= 1e-10)"};
}

// 4. Fixed point on the standard fixture: convergence with shrinking deltas,
//    self-consistency within 2 tol, and the constant-mean property within
//    3 sigma sqrt(T/n) + 2 dx.
Outcome criterion_fixed_point() {
    auto p = fixtures::interbank();
    Grid g = fixtures::standard_grid();
    auto spec = fixtures::interbank_spec();
    auto mu0 = Measure::gaussian(g, 0.0, 0.25);
    MfgOptions opts;
    opts.tol = 1e-3;

    auto [sol, rep] = solve_mfg(spec, mu0, g, opts);
    bool ratios_ok = true;
    for (double r : rep.ratios) ratios_ok = ratios_ok && r < 1.0;

    const int n_particles = 20000;
    double bound = 3.0 * p.sigma * std::sqrt(p.horizon / n_particles) + 2.0 * g.dx;
    double worst_mean = 0.0;
    for (int k = 0; k < g.nt; ++k)
        worst_mean = std::max(worst_mean, std::abs(sol.flow.at(k).mean() - p.m0));
    auto particle_check = systemic::verify_fixed_point_mean(p, g, n_particles, 31);

    bool pass = sol.converged && ratios_ok && sol.self_consistency <= 2.0 * opts.tol &&
                worst_mean <= bound && particle_check.within_bound;
    return {pass, "converged=" + std::string(sol.converged ? "yes" : "no") +
                      ", self-consistency " + fmt(sol.self_consistency) + " (<= " +
                      fmt(2.0 * opts.tol) + "), max mean drift " +
                      fmt(std::max(worst_mean, particle_check.max_mean_drift)) + " (<= " +
                      fmt(bound) + ")"};
}

// 5. Free-boundary symmetry: half-widths agree within 2 dx, value asymmetry
//    below 1e-9, and the extracted policy equals the three-region form except
//    within one node of each boundary.
Outcome criterion_free_boundary() {
    auto p = fixtures::interbank();
    Grid g = fixtures::standard_grid();
    auto sol = systemic::solve_systemic_hjb(p, g);

    double worst_bsym = 0.0;
    for (int k = 0; k < g.nt; ++k)
        if (std::isfinite(sol.boundary.h[k]))
            worst_bsym = std::max(worst_bsym, std::abs((p.m0 - sol.boundary.x1[k]) -
                                                       (sol.boundary.x2[k] - p.m0)));

    double worst_vsym = 0.0;
    for (int k = 0; k < g.nt; ++k)
        for (int i = 0; i < g.nx; ++i)
            worst_vsym = std::max(worst_vsym, std::abs(sol.value.at(k, i) -
                                                       sol.value.at(k, g.nx - 1 - i)));

    int policy_mismatches = 0;
    for (int k = 0; k < g.nt; ++k) {
        double x1 = sol.boundary.x1[k], x2 = sol.boundary.x2[k];
        for (int i = 0; i < g.nx; ++i) {
            double x = g.x(i);
            if ((std::isfinite(x1) && std::abs(x - x1) <= g.dx) ||
                (std::isfinite(x2) && std::abs(x - x2) <= g.dx))
                continue;
            double want = 0.0;
            if (std::isfinite(x1) && x < x1)
                want = p.theta;
            else if (std::isfinite(x2) && x > x2)
                want = -p.theta;
            if (sol.policy.at(k, i) != want) ++policy_mismatches;
        }
    }

    bool pass = worst_bsym <= 2.0 * g.dx && worst_vsym <= 1e-9 && policy_mismatches == 0;
    return {pass, "boundary asymmetry " + fmt(worst_bsym) + " (<= " + fmt(2.0 * g.dx) +
                      "), value asymmetry " + fmt(worst_vsym) +
                      " (<= 1e-9), policy mismatches " + std::to_string(policy_mismatches)};
}

// 6. Closed-form time coefficients: cross-region identities to 1e-12 and the
//    defining ODEs to 1e-9 under a fourth-order time difference.
Outcome criterion_coefficients() {
    auto p = fixtures::interbank();
    p.c = 1.0;
    auto cs = systemic::coefficients(p);
    const double h = 1e-3;
    double s2 = p.sigma * p.sigma;

    auto d4 = [&](const std::function<double(double)>& f, double s) {
        return (-f(s + 2 * h) + 8 * f(s + h) - 8 * f(s - h) + f(s - 2 * h)) / (12.0 * h);
    };

    double worst_identity = 0.0, worst_ode = 0.0;
    for (int i = 0; i < 200; ++i) {
        double s = 0.01 + (p.horizon - 0.02) * i / 199.0;
        worst_identity = std::max({worst_identity, std::abs(cs.eta1(s) - cs.zeta1(s)),
                                   std::abs(cs.eta1(s) - cs.lambda1(s)),
                                   std::abs(cs.zeta3(s) - cs.lambda3(s)),
                                   std::abs(cs.lambda2(s) + cs.zeta2(s))});
        auto eta1 = [&](double t) { return cs.eta1(t); };
        auto eta3 = [&](double t) { return cs.eta3(t); };
        auto zeta1 = [&](double t) { return cs.zeta1(t); };
        auto zeta2 = [&](double t) { return cs.zeta2(t); };
        auto zeta3 = [&](double t) { return cs.zeta3(t); };
        auto lam1 = [&](double t) { return cs.lambda1(t); };
        auto lam2 = [&](double t) { return cs.lambda2(t); };
        auto lam3 = [&](double t) { return cs.lambda3(t); };
        worst_ode = std::max(
            {worst_ode, std::abs(d4(eta1, s) - 2 * p.a * cs.eta1(s) + 0.5 * p.eps),
             std::abs(d4(eta3, s) + s2 * cs.eta1(s)),
             std::abs(d4(zeta1, s) - 2 * p.a * cs.zeta1(s) + 0.5 * p.eps),
             std::abs(d4(zeta2, s) - p.a * cs.zeta2(s) - 2 * p.theta * cs.zeta1(s)),
             std::abs(d4(zeta3, s) + p.r * p.theta - p.theta * cs.zeta2(s) + s2 * cs.zeta1(s)),
             std::abs(d4(lam1, s) - 2 * p.a * cs.lambda1(s) + 0.5 * p.eps),
             std::abs(d4(lam2, s) - p.a * cs.lambda2(s) + 2 * p.theta * cs.lambda1(s)),
             std::abs(d4(lam3, s) + p.r * p.theta + p.theta * cs.lambda2(s) +
                      s2 * cs.lambda1(s))});
    }

    bool pass = worst_identity <= 1e-12 && worst_ode <= 1e-9;
    return {pass, "identity deviation " + fmt(worst_identity) + " (<= 1e-12), ODE residual " +
                      fmt(worst_ode) + " (<= 1e-9)"};
}

// 7. Special functions: order -1 vs the erfc closed form on [-3, 3], the
//    zero-argument values vs an independent Gamma, and second-order decay of
//    the fundamental-solution residual.
Outcome criterion_special_functions() {
    double worst_erfc = 0.0;
    for (int i = 0; i <= 60; ++i) {
        double x = -3.0 + 0.1 * i;
        double ref =
            std::exp(0.25 * x * x) * std::sqrt(M_PI / 2.0) * std::erfc(x / std::sqrt(2.0));
        worst_erfc = std::max(worst_erfc,
                              std::abs(systemic::parabolic_cylinder_d(-1.0, x) - ref));
    }

    double worst_zero = 0.0;
    for (double alpha : {-0.5, -1.5, -2.5}) {
        double ref = std::sqrt(M_PI) * std::pow(2.0, 0.5 * alpha) /
                     oracle::lanczos_gamma(0.5 * (1.0 - alpha));
        worst_zero = std::max(worst_zero,
                              std::abs(systemic::parabolic_cylinder_d(alpha, 0.0) - ref));
    }

    auto p = fixtures::interbank();
    std::vector<double> dys, rs;
    for (int n : {51, 101, 201}) {
        rs.push_back(systemic::phi1_homogeneous_residual(p, -1.0, 0.5, n));
        dys.push_back(1.0 / (n - 1));
    }
    double order = oracle::loglog_slope(dys, rs);

    bool pass = worst_erfc <= 1e-9 && worst_zero <= 1e-9 && std::abs(order - 2.0) <= 0.3;
    return {pass, "erfc deviation " + fmt(worst_erfc) + ", zero-value deviation " +
                      fmt(worst_zero) + " (<= 1e-9), residual order " + fmt(order) +
                      " (2 +/- 0.3)"};
}

// 8. Finite-game scaling over N in {8,...,256} with 64 replications: the mean
//    squared coupling gap fits a slope in [-1.35, -0.65] and the deviation
//    gap a slope in [-0.85, -0.15].
Outcome criterion_nash_scaling() {
    auto p = fixtures::interbank();
    Grid g = fixtures::standard_grid();
    auto spec = fixtures::interbank_spec();
    auto mu0 = Measure::point_mass(g, p.m0);
    auto [sol, rep] = solve_mfg(spec, mu0, g, {.tol = 1e-3});
    if (!sol.converged) return {false, "equilibrium solve failed to converge"};

    NPlayerOptions sim;
    sim.x0 = p.m0;
    sim.nt_sim = 101;
    NashGapOptions nopts;
    nopts.sim = sim;
    nopts.deviation_budget = 6;

    const std::vector<double> ns = {8, 16, 32, 64, 128, 256};
    const int reps = 64;
    std::vector<double> gaps, eps;
    for (double n : ns) {
        gaps.push_back(
            coupling_gap(spec, sol.policy, sol.flow, static_cast<int>(n), reps, 17, sim)
                .mean_sq_gap);
        eps.push_back(nash_gap(spec, sol, static_cast<int>(n), reps, 91, nopts).epsilon_hat);
    }
    double gap_slope = scaling_fit(ns, gaps).slope;
    double eps_slope = scaling_fit(ns, eps).slope;

    bool pass = gap_slope >= -1.35 && gap_slope <= -0.65 && eps_slope >= -0.85 &&
                eps_slope <= -0.15;
    return {pass, "coupling slope " + fmt(gap_slope) + " (in [-1.35, -0.65]), deviation slope " +
                      fmt(eps_slope) + " (in [-0.85, -0.15])"};
}

// 9. Common-noise reduction at rho in {0.5, 1.0}: the mean increments load on
//    the shared noise with slope rho sigma (3 standard errors) and the
//    centered law matches the conditioned reference within D1 <= 0.03.
Outcome criterion_common_noise() {
    auto base = fixtures::interbank();
    Grid g = fixtures::standard_grid();
    std::string detail;
    bool pass = true;
    for (double rho : {0.5, 1.0}) {
        auto p = base;
        p.rho = rho;
        auto rep = systemic::common_noise_reduction(p, g, 100000, 77);
        bool slope_ok =
            std::abs(rep.regression_slope - rep.expected_slope) <= 3.0 * rep.regression_se;
        bool law_ok = rep.max_d1 <= 0.03;
        pass = pass && slope_ok && law_ok;
        detail += "rho=" + fmt(rho) + ": slope " + fmt(rep.regression_slope) + " vs " +
                  fmt(rep.expected_slope) + " (3se=" + fmt(3.0 * rep.regression_se) +
                  "), max D1 " + fmt(rep.max_d1) + " (<= 0.03); ";
    }
    return {pass, detail};
}

// 10. Repeated CLI runs with identical config and seed on 1 vs 8 threads
//     produce byte-identical CSVs.
Outcome criterion_determinism() {
    const char* cli = std::getenv("MFG_CLI");
    if (!cli) return {false, "MFG_CLI not set"};

    fs::path tmp = fs::temp_directory_path() / "mfg_acceptance_det";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    fs::path cfg_path = tmp / "fixture.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "[model]\nfamily = systemic_risk\na = 1.0\neps = 1.0\nc = 1.0\nr = 0.1\n"
               "sigma = 0.5\ntheta = 1.0\nT = 1.0\nm = 0.0\n"
               "[grid]\nnx = 61\n[mu0]\nkind = gaussian\nmean = 0.0\nvariance = 0.25\n"
               "[solve]\ntol = 1e-3\n[simulate]\nn_particles = 5000\n";
    }

    auto run = [&](const std::string& sub, const std::string& dir, int threads) {
        std::string cmd = std::string(cli) + " --threads " + std::to_string(threads) + " " +
                          sub + " --config " + cfg_path.string() + " --seed 9 --out " +
                          (tmp / dir).string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    auto slurp = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool ran = run("systemic", "sys1", 1) && run("systemic", "sys8", 8) &&
               run("systemic", "sys1b", 1) && run("solve-mfg", "mfg1", 1) &&
               run("solve-mfg", "mfg8", 8);
    if (!ran) return {false, "CLI runs failed"};

    int mismatches = 0, compared = 0;
    for (const auto& entry : fs::directory_iterator(tmp / "sys1")) {
        auto name = entry.path().filename().string();
        if (name.find(".csv") == std::string::npos && name != "summary.json") continue;
        ++compared;
        auto ref = slurp(entry.path());
        if (ref != slurp(tmp / "sys8" / name)) ++mismatches;
        if (ref != slurp(tmp / "sys1b" / name)) ++mismatches;
    }
    for (const auto& entry : fs::directory_iterator(tmp / "mfg1")) {
        auto name = entry.path().filename().string();
        if (name.find(".csv") == std::string::npos && name != "summary.json") continue;
        ++compared;
        if (slurp(entry.path()) != slurp(tmp / "mfg8" / name)) ++mismatches;
    }

    bool pass = mismatches == 0 && compared >= 10;
    return {pass, std::to_string(compared) + " artifacts compared across thread counts, " +
                      std::to_string(mismatches) + " mismatches"};
}

struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    worker_threads() = 2;
    const std::vector<Criterion> criteria = {
        {1, "value function vs Feynman-Kac oracle", criterion_value_function},
        {2, "bang-bang control minimum", criterion_hamiltonian},
        {3, "forward solver equivalence", criterion_forward_equivalence},
        {4, "mean field game fixed point", criterion_fixed_point},
        {5, "free boundary symmetry", criterion_free_boundary},
        {6, "coefficient identities and ODEs", criterion_coefficients},
        {7, "special functions", criterion_special_functions},
        {8, "finite-game scaling", criterion_nash_scaling},
        {9, "common-noise reduction", criterion_common_noise},
        {10, "CLI determinism", criterion_determinism},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), c.number) == selected.end())
            continue;
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << "criterion " << c.number << ": "
                  << c.name << " — " << out.detail << "\n";
        if (!out.pass) ++failures;
    }
    return failures;
}
