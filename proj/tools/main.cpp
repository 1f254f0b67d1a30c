#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mfg/config.hpp"
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

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mfg;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start)
            .count();
    }
};

// Collects outputs and wall-clock timings; timings live only in the
// manifest so every CSV stays byte-identical across reruns.
struct Manifest {
    json doc;
    fs::path dir;

    Manifest(const std::string& command, const fs::path& out_dir) : dir(out_dir) {
        doc["command"] = command;
        doc["tool_version"] = kVersion;
        doc["outputs"] = json::array();
        doc["timings_ms"] = json::object();
    }
    void add_output(const fs::path& p) { doc["outputs"].push_back(p.filename().string()); }
    void timing(const std::string& phase, double ms) { doc["timings_ms"][phase] = ms; }
    void write() {
        std::ofstream out(dir / "manifest.json");
        out << doc.dump(2) << "\n";
    }
};

fs::path resolve_out_dir(std::string out) {
    if (out.empty()) {
        const char* root = std::getenv("MFG_OUT_ROOT");
        out = root ? std::string(root) + "/run" : "run";
    }
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw std::invalid_argument("cannot create output directory " + dir.string());
    return dir;
}

ModelConfig model_config_from(const Config& cfg) {
    ModelConfig mc;
    mc.family = cfg.get_or("model", "family", "systemic_risk");
    auto it = cfg.sections.find("model");
    if (it != cfg.sections.end())
        for (const auto& [key, value] : it->second)
            if (key != "family") mc.params[key] = std::stod(value);
    return mc;
}

Grid grid_from(const Config& cfg, const ModelSpec& spec) {
    int nx = cfg.get_int_or("grid", "nx", 121);
    int nt = cfg.get_int_or("grid", "nt", 0);
    if (nt <= 0) nt = cfl_time_nodes(spec, nx);
    return make_model_grid(spec, nx, nt);
}

Measure mu0_from(const Config& cfg, const Grid& grid) {
    std::string kind = cfg.get_or("mu0", "kind", "gaussian");
    if (kind == "gaussian")
        return Measure::gaussian(grid, cfg.get_double_or("mu0", "mean", 0.0),
                                 cfg.get_double_or("mu0", "variance", 0.25));
    if (kind == "point") return Measure::point_mass(grid, cfg.get_double_or("mu0", "at", 0.0));
    if (kind == "uniform")
        return Measure::uniform(grid, cfg.get_double_or("mu0", "a", -1.0),
                                cfg.get_double_or("mu0", "b", 1.0));
    throw std::invalid_argument("unknown mu0 kind '" + kind + "'");
}

void warn_boundary_mass(const MeasureFlow& flow) {
    double m = boundary_mass(flow);
    if (m > 1e-3)
        std::cerr << "warning: measure flow carries mass " << m
                  << " within 5 nodes of the domain boundary; consider widening [x_lo, x_hi]\n";
}

json config_as_json(const Config& cfg) {
    json j = json::object();
    for (const auto& [section, kv] : cfg.sections) {
        json s = json::object();
        for (const auto& [k, v] : kv) s[k] = v;
        j[section.empty() ? "(top)" : section] = s;
    }
    return j;
}

void write_policy_outputs(const fs::path& dir, const BangBangPolicy& policy, Manifest& man) {
    csv::write_field(dir / "policy.csv", policy.grid, policy.action);
    man.add_output(dir / "policy.csv");
    csv::write_boundary(dir / "policy_lower.csv", policy.grid, policy.lower_boundary);
    man.add_output(dir / "policy_lower.csv");
    csv::write_boundary(dir / "policy_upper.csv", policy.grid, policy.upper_boundary);
    man.add_output(dir / "policy_upper.csv");
}

int cmd_solve_mfg(const Config& cfg, const fs::path& dir, uint64_t seed, double tol_flag) {
    Manifest man("solve-mfg", dir);
    man.doc["config"] = config_as_json(cfg);
    man.doc["seed"] = seed;

    auto spec = build_model(model_config_from(cfg));
    Grid grid = grid_from(cfg, spec);
    auto mu0 = mu0_from(cfg, grid);

    MfgOptions opts;
    opts.tol = tol_flag > 0 ? tol_flag : cfg.get_double_or("solve", "tol", 1e-3);
    opts.max_iter = cfg.get_int_or("solve", "max_iter", 50);
    opts.damping = cfg.get_double_or("solve", "damping", 1.0);
    opts.seed = seed;
    std::string fwd = cfg.get_or("solve", "forward", "grid");
    opts.forward = fwd == "particles" ? MfgOptions::Forward::particles : MfgOptions::Forward::grid;
    opts.n_particles =
        cfg.get_int_or("solve", "n_particles", cfg.get_int_or("simulate", "n_particles", 20000));

    Timer t;
    auto [sol, rep] = solve_mfg(spec, mu0, grid, opts);
    man.timing("solve", t.ms());
    warn_boundary_mass(sol.flow);

    csv::write_field(dir / "value.csv", grid, sol.value.values);
    man.add_output(dir / "value.csv");
    csv::write_flow(dir / "flow.csv", sol.flow);
    man.add_output(dir / "flow.csv");
    write_policy_outputs(dir, sol.policy, man);

    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < rep.deltas.size(); ++k)
        rows.push_back({static_cast<double>(k), rep.deltas[k],
                        k > 0 && k - 1 < rep.ratios.size() ? rep.ratios[k - 1] : 0.0});
    csv::write_rows(dir / "iterations.csv", {"k", "delta", "ratio"}, rows);
    man.add_output(dir / "iterations.csv");

    json summary;
    summary["converged"] = sol.converged;
    summary["diverged"] = sol.diverged;
    summary["iterations"] = sol.iterations;
    summary["final_delta"] = sol.final_delta;
    summary["self_consistency"] = sol.self_consistency;
    summary["contraction_estimate"] = rep.estimated_contraction;
    summary["policy_rational"] = sol.policy.a4_ok;
    {
        std::ofstream out(dir / "summary.json");
        out << summary.dump(2) << "\n";
    }
    man.add_output(dir / "summary.json");
    man.write();

    if (sol.diverged || !sol.converged) {
        std::cerr << (sol.diverged ? "divergence detected" : "did not converge") << " after "
                  << sol.iterations << " iterations (final delta " << sol.final_delta << ")\n";
        return 1;
    }
    std::cout << "converged in " << sol.iterations << " iterations, final delta "
              << sol.final_delta << "\n";
    return 0;
}

int cmd_systemic(const Config& cfg, const fs::path& dir, uint64_t seed) {
    Manifest man("systemic", dir);
    man.doc["config"] = config_as_json(cfg);
    man.doc["seed"] = seed;

    systemic::SystemicRiskParams p;
    p.a = cfg.get_double_or("model", "a", 1.0);
    p.eps = cfg.get_double_or("model", "eps", 1.0);
    p.c = cfg.get_double_or("model", "c", 1.0);
    p.r = cfg.get_double_or("model", "r", 0.1);
    p.sigma = cfg.get_double_or("model", "sigma", 0.5);
    p.rho = cfg.get_double_or("model", "rho", 0.0);
    p.theta = cfg.get_double_or("model", "theta", 1.0);
    p.horizon = cfg.get_double_or("model", "T", 1.0);
    p.m0 = cfg.get_double_or("model", "m", 0.0);

    int nx = cfg.get_int_or("grid", "nx", 121);
    int nt = cfg.get_int_or("grid", "nt", 0);
    Grid grid = systemic::make_centered_grid(p, nx, nt);
    int n_particles = cfg.get_int_or("simulate", "n_particles", 100000);

    Timer t;
    auto sol = systemic::solve_systemic_hjb(p, grid);
    man.timing("backward_solve", t.ms());

    auto cs = systemic::coefficients(p);
    std::vector<std::vector<double>> coef_rows;
    for (int k = 0; k < grid.nt; ++k) {
        double s = grid.t(k);
        coef_rows.push_back({s, cs.eta1(s), cs.eta3(s), cs.zeta1(s), cs.zeta2(s), cs.zeta3(s),
                             cs.lambda1(s), cs.lambda2(s), cs.lambda3(s)});
    }
    csv::write_rows(dir / "coefficients.csv",
                    {"s", "eta1", "eta3", "zeta1", "zeta2", "zeta3", "lambda1", "lambda2",
                     "lambda3"},
                    coef_rows);
    man.add_output(dir / "coefficients.csv");

    std::vector<std::vector<double>> brow;
    for (int k = 0; k < grid.nt; ++k)
        brow.push_back({grid.t(k), sol.boundary.x1[k], sol.boundary.x2[k], sol.boundary.h[k]});
    csv::write_rows(dir / "boundary.csv", {"s", "x1", "x2", "h"}, brow);
    man.add_output(dir / "boundary.csv");

    csv::write_field(dir / "value.csv", grid, sol.value.values);
    man.add_output(dir / "value.csv");
    write_policy_outputs(dir, sol.policy, man);

    json summary;
    summary["degenerate_boundary"] = sol.boundary.degenerate;
    summary["policy_rational"] = sol.policy.a4_ok;

    Timer t2;
    if (p.rho == 0.0) {
        auto mean_rep = systemic::verify_fixed_point_mean(p, grid, n_particles, seed);
        summary["mean_drift_max"] = mean_rep.max_mean_drift;
        summary["mean_drift_bound"] = mean_rep.bound;
        summary["mean_within_bound"] = mean_rep.within_bound;
    } else {
        auto cn = systemic::common_noise_reduction(p, grid, n_particles, seed);
        summary["regression_slope"] = cn.regression_slope;
        summary["expected_slope"] = cn.expected_slope;
        summary["regression_se"] = cn.regression_se;
        summary["centered_law_max_d1"] = cn.max_d1;
        summary["mean_track_max_err"] = cn.mean_track_max_err;
    }
    man.timing("verification", t2.ms());

    {
        std::ofstream out(dir / "summary.json");
        out << summary.dump(2) << "\n";
    }
    man.add_output(dir / "summary.json");
    man.write();
    std::cout << "systemic outputs written to " << dir.string() << "\n";
    return 0;
}

int cmd_simulate_nplayer(const Config& cfg, const fs::path& dir, uint64_t seed) {
    Manifest man("simulate-nplayer", dir);
    man.doc["config"] = config_as_json(cfg);
    man.doc["seed"] = seed;

    auto spec = build_model(model_config_from(cfg));
    Grid grid = grid_from(cfg, spec);
    auto mu0 = mu0_from(cfg, grid);

    MfgOptions mopts;
    mopts.tol = cfg.get_double_or("solve", "tol", 1e-3);
    mopts.seed = seed;
    Timer t;
    auto [sol, rep] = solve_mfg(spec, mu0, grid, mopts);
    man.timing("solve", t.ms());
    if (!sol.converged) {
        std::cerr << "equilibrium solve did not converge\n";
        man.write();
        return 1;
    }

    NPlayerOptions opts;
    opts.x0 = cfg.get_double_or("nplayer", "x0", 0.0);
    opts.nt_sim = cfg.get_int_or("nplayer", "nt_sim", 101);
    int n = cfg.get_int_or("nplayer", "n", 64);
    int reps = cfg.get_int_or("nplayer", "reps", 64);

    Timer t3;
    auto stats = simulate_nplayer(spec, sol.policy, n, reps, seed, opts);
    man.timing("simulate", t3.ms());

    std::vector<std::vector<double>> rows;
    for (int r = 0; r < stats.n_rep; ++r)
        rows.push_back({static_cast<double>(r), stats.rep_mean_costs[r]});
    csv::write_rows(dir / "costs.csv", {"rep", "mean_cost"}, rows);
    man.add_output(dir / "costs.csv");

    json summary;
    summary["n_players"] = stats.n_players;
    summary["n_rep"] = stats.n_rep;
    summary["mean_cost"] = stats.mean_cost;
    summary["std_error"] = stats.std_error;
    {
        std::ofstream out(dir / "summary.json");
        out << summary.dump(2) << "\n";
    }
    man.add_output(dir / "summary.json");
    man.write();
    std::cout << "mean cost " << stats.mean_cost << " +/- " << stats.std_error << "\n";
    return 0;
}

int cmd_nash_gap(const Config& cfg, const fs::path& dir, uint64_t seed,
                 const std::vector<int>& n_list, int reps_flag) {
    Manifest man("nash-gap", dir);
    man.doc["config"] = config_as_json(cfg);
    man.doc["seed"] = seed;

    auto spec = build_model(model_config_from(cfg));
    Grid grid = grid_from(cfg, spec);
    auto mu0 = mu0_from(cfg, grid);

    MfgOptions mopts;
    mopts.tol = cfg.get_double_or("solve", "tol", 1e-3);
    mopts.seed = seed;
    Timer t;
    auto [sol, rep] = solve_mfg(spec, mu0, grid, mopts);
    man.timing("solve", t.ms());
    if (!sol.converged) {
        std::cerr << "equilibrium solve did not converge\n";
        man.write();
        return 1;
    }

    std::vector<int> ns = n_list;
    if (ns.empty()) ns = {8, 16, 32, 64, 128, 256};
    int reps = reps_flag > 0 ? reps_flag : cfg.get_int_or("nplayer", "reps", 64);

    NashGapOptions nopts;
    nopts.sim.x0 = cfg.get_double_or("nplayer", "x0", 0.0);
    nopts.sim.nt_sim = cfg.get_int_or("nplayer", "nt_sim", 101);
    nopts.deviation_budget = cfg.get_int_or("nplayer", "deviation_budget", 6);

    std::vector<std::vector<double>> rows;
    std::vector<double> nsd, eps, gaps;
    Timer t2;
    for (int n : ns) {
        auto est = nash_gap(spec, sol, n, reps, seed, nopts);
        auto cg = coupling_gap(spec, sol.policy, sol.flow, n, reps, seed, nopts.sim);
        rows.push_back({static_cast<double>(n), est.epsilon_hat, est.std_error,
                        cg.mean_sq_gap});
        nsd.push_back(n);
        eps.push_back(est.epsilon_hat);
        gaps.push_back(cg.mean_sq_gap);
        std::cout << "N=" << n << " epsilon_hat=" << est.epsilon_hat << " ("
                  << est.deviation_descriptor << ")\n";
    }
    man.timing("scaling", t2.ms());
    csv::write_rows(dir / "nash_gap.csv", {"N", "epsilon_hat", "std_error", "coupling_gap_mean"},
                    rows);
    man.add_output(dir / "nash_gap.csv");

    json summary;
    try {
        auto efit = scaling_fit(nsd, eps);
        summary["epsilon_slope"] = efit.slope;
        summary["epsilon_r2"] = efit.r2;
        summary["epsilon_degenerate"] = efit.degenerate;
    } catch (const std::exception& e) {
        summary["epsilon_slope_error"] = e.what();
    }
    auto gfit = scaling_fit(nsd, gaps);
    summary["coupling_slope"] = gfit.slope;
    summary["coupling_r2"] = gfit.r2;
    {
        std::ofstream out(dir / "summary.json");
        out << summary.dump(2) << "\n";
    }
    man.add_output(dir / "summary.json");
    man.write();
    return 0;
}

int run_verify_suite(const std::string& suite) {
    if (suite != "coefficients" && suite != "specialfunctions" && suite != "laplace" &&
        suite != "all") {
        std::cerr << "unknown verify suite '" << suite << "'\n";
        return 2;
    }
    int failures = 0;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << detail << ")\n";
        if (!ok) ++failures;
    };
    systemic::SystemicRiskParams p;

    if (suite == "coefficients" || suite == "all") {
        auto cs = systemic::coefficients(p);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            double s = p.horizon * i / 199.0;
            worst = std::max({worst, std::abs(cs.eta1(s) - cs.zeta1(s)),
                              std::abs(cs.eta1(s) - cs.lambda1(s)),
                              std::abs(cs.zeta3(s) - cs.lambda3(s)),
                              std::abs(cs.lambda2(s) + cs.zeta2(s))});
        }
        report("coefficient identities", worst <= 1e-12,
               "max deviation " + csv::format_double(worst));
        double tcond = std::max({std::abs(cs.eta1(p.horizon) - 0.5 * p.c),
                                 std::abs(cs.eta3(p.horizon)), std::abs(cs.zeta2(p.horizon)),
                                 std::abs(cs.zeta3(p.horizon)), std::abs(cs.lambda2(p.horizon)),
                                 std::abs(cs.lambda3(p.horizon))});
        report("coefficient terminal conditions", tcond <= 1e-12,
               "max deviation " + csv::format_double(tcond));
    }
    if (suite == "specialfunctions" || suite == "all") {
        double worst = 0.0;
        for (int i = 0; i <= 60; ++i) {
            double x = -3.0 + 0.1 * i;
            double ref = std::exp(0.25 * x * x) * std::sqrt(M_PI / 2.0) *
                         std::erfc(x / std::sqrt(2.0));
            worst = std::max(worst, std::abs(systemic::parabolic_cylinder_d(-1.0, x) - ref));
        }
        report("cylinder function vs erfc form", worst <= 1e-9,
               "max deviation " + csv::format_double(worst));
    }
    if (suite == "laplace" || suite == "all") {
        auto res = systemic::laplace_ode_residual(p, -1.0, 1.0, 101);
        report("particular solution residual", res.particular_max <= 1e-10,
               csv::format_double(res.particular_max));
        double r1 = systemic::phi1_homogeneous_residual(p, -1.0, 0.5, 51);
        double r2 = systemic::phi1_homogeneous_residual(p, -1.0, 0.5, 101);
        double order = std::log2(r1 / r2);
        report("fundamental solution second-order residual", std::abs(order - 2.0) <= 0.3,
               "fitted order " + csv::format_double(order));
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean field game solver with velocity-bounded controls"};
    app.require_subcommand(1);

    std::string config_path, out_dir, suite = "all";
    uint64_t seed = 1;
    int threads = 1;
    double tol_flag = 0.0;
    int reps_flag = 0;
    std::vector<int> n_list;

    app.add_option("--threads", threads, "worker thread cap (results do not depend on it)");

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* copt = sub->add_option("--config", config_path, "key = value configuration file");
        if (needs_config) copt->required();
        sub->add_option("--out", out_dir, "output directory (default $MFG_OUT_ROOT/run)");
        sub->add_option("--seed", seed, "base seed for all randomness");
    };

    auto* solve = app.add_subcommand("solve-mfg", "solve the mean field game fixed point");
    add_common(solve, true);
    solve->add_option("--tol", tol_flag, "fixed-point tolerance in sup-t D1");

    auto* nplayer_cmd =
        app.add_subcommand("simulate-nplayer", "simulate the finite-player game");
    add_common(nplayer_cmd, true);

    auto* nash = app.add_subcommand("nash-gap", "estimate the unilateral-deviation gap");
    add_common(nash, true);
    nash->add_option("--N", n_list, "player counts")->delimiter(',');
    nash->add_option("--reps", reps_flag, "replications per player count");

    auto* syst = app.add_subcommand("systemic", "interbank example: solve and verify");
    add_common(syst, false);

    auto* verify = app.add_subcommand("verify", "run a built-in verification battery");
    verify->add_option("--suite", suite,
                       "coefficients | specialfunctions | laplace | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    worker_threads() = std::max(1, threads);

    try {
        Config cfg;
        if (!config_path.empty()) cfg = Config::parse_file(config_path);

        if (verify->parsed()) return run_verify_suite(suite);
        fs::path dir = resolve_out_dir(out_dir);
        if (solve->parsed()) return cmd_solve_mfg(cfg, dir, seed, tol_flag);
        if (syst->parsed()) return cmd_systemic(cfg, dir, seed);
        if (nplayer_cmd->parsed()) return cmd_simulate_nplayer(cfg, dir, seed);
        if (nash->parsed()) return cmd_nash_gap(cfg, dir, seed, n_list, reps_flag);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
