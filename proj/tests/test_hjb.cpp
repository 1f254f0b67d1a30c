#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfg/hjb.hpp"
#include "mfg/rng.hpp"
#include "mfg/systemic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {

// Monte Carlo cost of an arbitrary policy under frozen interbank
// coefficients, Euler stepping on the policy's own time grid.
oracle::MonteCarloValue policy_cost_mc(const systemic::SystemicRiskParams& p,
                                       const BangBangPolicy& pol, double x0, int n_paths,
                                       uint64_t seed) {
    const Grid& g = pol.grid;
    double dt = g.dt, sqrt_dt = std::sqrt(dt);
    std::vector<double> samples(n_paths);
    for (int path = 0; path < n_paths; ++path) {
        double x = x0, cost = 0.0;
        double u = pol.at(0, g.nearest_node(x));
        double rate = 0.5 * p.eps * x * x + p.r * std::abs(u);
        for (int k = 0; k + 1 < g.nt; ++k) {
            double z = rng::normal(seed, static_cast<uint64_t>(path),
                                   static_cast<uint64_t>(k));
            x += (p.a * (p.m0 - x) + u) * dt + p.sigma * sqrt_dt * z;
            u = k + 2 < g.nt ? pol.at(k + 1, g.nearest_node(x)) : 0.0;
            double rate_next = 0.5 * p.eps * (p.m0 - x) * (p.m0 - x) + p.r * std::abs(u);
            cost += 0.5 * (rate + rate_next) * dt;
            rate = rate_next;
        }
        cost += 0.5 * p.c * (p.m0 - x) * (p.m0 - x);
        samples[path] = cost;
    }
    double mean = oracle::mean_of(samples);
    return {mean, std::sqrt(oracle::variance_of(samples) / n_paths)};
}

}  // namespace

TEST_CASE("zero cost gives zero value and idle policy") {
    ModelSpec spec = fixtures::no_coupling_spec();
    spec.b0 = [](double, double) { return 0.4; };
    spec.f0 = [](double, double) { return 0.0; };
    spec.g1 = [](double) { return 0.3; };
    spec.g2 = [](double) { return 0.8; };
    Grid g = make_model_grid(spec, 41, cfl_time_nodes(spec, 41));
    auto flow = MeasureFlow::constant(g, Measure::gaussian(g, 0.0, 0.3));

    auto v = solve_hjb(spec, flow, g);
    for (double val : v.values) CHECK(val == doctest::Approx(0.0).epsilon(1e-14));
    auto pol = extract_policy(v, spec);
    for (double a : pol.action) CHECK(a == 0.0);
}

TEST_CASE("constant cost integrates to time-to-go") {
    ModelSpec spec = fixtures::no_coupling_spec();
    spec.theta = 0.0;
    spec.b0 = [](double, double) { return 0.0; };
    spec.f0 = [](double, double) { return 1.0; };
    Grid g = make_model_grid(spec, 41, cfl_time_nodes(spec, 41));
    auto flow = MeasureFlow::constant(g, Measure::gaussian(g, 0.0, 0.3));

    auto v = solve_hjb(spec, flow, g);
    for (int k = 0; k < g.nt; ++k)
        for (int i = 0; i < g.nx; ++i)
            CHECK(std::abs(v.at(k, i) - (g.horizon - g.t(k))) < 1e-10);

    auto res = hjb_residual(v, spec, flow);
    CHECK(res.max_norm < 1e-10);
}

TEST_CASE("uncontrolled interbank value matches Feynman-Kac Monte Carlo") {
    auto p = fixtures::interbank();
    p.theta = 0.0;
    Grid g = systemic::make_centered_grid(p, 481);
    ModelSpec spec = systemic::model_spec(p);
    spec.theta = 0.0;
    auto flow = MeasureFlow::constant(g, Measure::point_mass(g, 0.0));
    auto v = solve_hjb(spec, flow, g);

    for (double x0 : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        auto mc = oracle::feynman_kac_ou(p.a, p.eps, p.c, p.sigma, p.m0, p.horizon, x0, 200,
                                         20000, 31);
        double vi = v.at(0, g.nearest_node(x0));
        CHECK(std::abs(vi - mc.mean) < 3.0 * mc.std_error);
    }
}

TEST_CASE("three-branch Hamiltonian equals brute force over the control box") {
    uint64_t seed = 5150;
    for (int trial = 0; trial < 1000; ++trial) {
        auto u = rng::uniform_pair(seed, trial, 0);
        auto w = rng::uniform_pair(seed, trial, 1);
        double p = 8.0 * (u[0] - 0.5);
        double g1 = 2.0 * u[1] - 0.5;
        double g2 = std::max(-g1, 0.0) + 2.0 * w[0];  // keep g1 + g2 >= 0
        double theta = 2.0 * w[1];

        double fast = bang_bang_hamiltonian(p, g1, g2, theta);
        double brute = 0.0;
        bool first = true;
        for (int iu = 0; iu <= 100; ++iu)
            for (int id = 0; id <= 100; ++id) {
                double up = theta * iu / 100.0, dn = theta * id / 100.0;
                double val = (p + g1) * up + (-p + g2) * dn;
                if (first || val < brute) brute = val;
                first = false;
            }
        CHECK(std::abs(fast - brute) <= 1e-9);
    }
}

TEST_CASE("residual of the scheme's own output vanishes") {
    auto spec = fixtures::interbank_spec();
    Grid g = fixtures::coarse_grid();
    auto flow = MeasureFlow::constant(g, Measure::gaussian(g, 0.3, 0.2));
    auto v = solve_hjb(spec, flow, g);
    auto res = hjb_residual(v, spec, flow);
    CHECK(res.max_norm < 1e-9);
    CHECK(res.nt_rows == g.nt - 1);
    CHECK(res.nx_cols == g.nx - 2);
}

TEST_CASE("plugging v = 0 into a unit-cost model leaves residual 1") {
    ModelSpec spec = fixtures::no_coupling_spec();
    spec.f0 = [](double, double) { return 1.0; };
    Grid g = make_model_grid(spec, 31, cfl_time_nodes(spec, 31));
    auto flow = MeasureFlow::constant(g, Measure::gaussian(g, 0.0, 0.3));
    ValueField zero;
    zero.grid = g;
    zero.values.assign(static_cast<size_t>(g.nt) * g.nx, 0.0);
    auto res = hjb_residual(zero, spec, flow);
    for (double r : res.values) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("policy extraction follows the gradient thresholds") {
    ModelSpec spec = fixtures::no_coupling_spec();
    spec.g1 = [](double) { return 1.0; };
    spec.g2 = [](double) { return 1.0; };
    spec.theta = 0.7;
    // dx = 1/16 is binary-exact, so linear fields give exact gradients and
    // the threshold tie is hit exactly.
    Grid g = make_grid(-1.0, 1.0, 1.0, 33, 5);

    auto field_with_slope = [&](double slope) {
        ValueField v;
        v.grid = g;
        v.values.resize(static_cast<size_t>(g.nt) * g.nx);
        for (int k = 0; k < g.nt; ++k)
            for (int i = 0; i < g.nx; ++i) v.at(k, i) = slope * g.x(i);
        return v;
    };

    auto steep_down = extract_policy(field_with_slope(-2.0), spec);
    for (double a : steep_down.action) CHECK(a == doctest::Approx(0.7));
    auto flat = extract_policy(field_with_slope(0.0), spec);
    for (double a : flat.action) CHECK(a == doctest::Approx(0.0));
    auto steep_up = extract_policy(field_with_slope(2.0), spec);
    for (double a : steep_up.action) CHECK(a == doctest::Approx(-0.7));

    // Gradient exactly at the threshold keeps the idle action.
    auto tie = extract_policy(field_with_slope(-1.0), spec);
    for (int k = 0; k < g.nt; ++k)
        for (int i = 1; i + 1 < g.nx; ++i) CHECK(tie.at(k, i) == doctest::Approx(0.0));
}

TEST_CASE("raising the running cost never lowers the value") {
    for (uint64_t trial = 0; trial < 5; ++trial) {
        auto u = rng::uniform_pair(99, trial, 0);
        ModelSpec lo = fixtures::no_coupling_spec();
        double amp = 0.5 + u[0];
        double shift = 2.0 * u[1] - 1.0;
        lo.f0 = [amp, shift](double x, double) {
            return amp * (1.0 + std::sin(3.0 * x + shift));
        };
        ModelSpec hi = lo;
        hi.f0 = [amp, shift](double x, double) {
            return amp * (1.0 + std::sin(3.0 * x + shift)) + 0.3 * (1.0 + std::cos(x));
        };
        Grid g = make_model_grid(lo, 41, cfl_time_nodes(lo, 41));
        auto flow = MeasureFlow::constant(g, Measure::gaussian(g, 0.0, 0.3));
        auto vlo = solve_hjb(lo, flow, g);
        auto vhi = solve_hjb(hi, flow, g);
        for (size_t i = 0; i < vlo.values.size(); ++i)
            CHECK(vhi.values[i] >= vlo.values[i] - 1e-12);
    }
}

TEST_CASE("refinement toward the Feynman-Kac oracle is at least first order") {
    auto p = fixtures::interbank();
    p.theta = 0.0;
    ModelSpec spec = systemic::model_spec(p);
    spec.theta = 0.0;

    // Exact solution of the uncontrolled problem for reference.
    auto cs = systemic::coefficients(p);
    auto exact = [&](double s, double x) { return cs.eta1(s) * x * x + cs.eta3(s); };

    std::vector<double> dxs, errs;
    for (int nx : {31, 61, 121}) {
        Grid g = systemic::make_centered_grid(p, nx);
        auto flow = MeasureFlow::constant(g, Measure::point_mass(g, 0.0));
        auto v = solve_hjb(spec, flow, g);
        double err = 0.0;
        for (double x0 : {-1.0, -0.5, 0.0, 0.5, 1.0})
            err = std::max(err, std::abs(v.at(0, g.nearest_node(x0)) - exact(0.0, x0)));
        dxs.push_back(g.dx);
        errs.push_back(err);
    }
    double order = oracle::loglog_slope(dxs, errs);
    CHECK(order >= 1.0);
}

TEST_CASE("extracted policy beats random comparison policies in Monte Carlo") {
    auto p = fixtures::interbank();
    Grid g = fixtures::coarse_grid();
    auto sol = systemic::solve_systemic_hjb(p, g);

    const double x0 = 0.5;
    const int n_paths = 20000;
    auto star = policy_cost_mc(p, sol.policy, x0, n_paths, 17);

    for (uint64_t trial = 0; trial < 20; ++trial) {
        auto u = rng::uniform_pair(400 + trial, 0, 0);
        double lo = -2.5 + 2.0 * u[0];
        double hi = lo + 0.3 + 2.5 * u[1];
        std::vector<double> lo_t(g.nt, lo), hi_t(g.nt, hi);
        auto comparison = BangBangPolicy::from_thresholds(g, p.theta, lo_t, hi_t);
        auto other = policy_cost_mc(p, comparison, x0, n_paths, 17);
        double joint_se = std::sqrt(star.std_error * star.std_error +
                                    other.std_error * other.std_error);
        CHECK(star.mean <= other.mean + 3.0 * joint_se + 2e-3);
    }
}
