#include "mfg/systemic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg::systemic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void validate(const SystemicRiskParams& p) {
    if (!(p.a > 0.0)) throw std::invalid_argument("systemic: a must be > 0");
    if (p.eps < 0.0 || p.c < 0.0 || p.r < 0.0 || p.theta < 0.0)
        throw std::invalid_argument("systemic: eps, c, r, theta must be >= 0");
    if (!(p.sigma > 0.0)) throw std::invalid_argument("systemic: sigma must be > 0");
    if (p.rho < 0.0 || p.rho > 1.0) throw std::invalid_argument("systemic: rho must be in [0,1]");
    if (!(p.horizon > 0.0)) throw std::invalid_argument("systemic: horizon must be > 0");
}

double CoefficientSet::eta1(double s) const {
    const auto& p = params;
    return (0.5 * p.c - 0.25 * p.eps / p.a) * std::exp(2.0 * p.a * (s - p.horizon)) +
           0.25 * p.eps / p.a;
}

double CoefficientSet::eta3(double s) const {
    const auto& p = params;
    double s2 = p.sigma * p.sigma;
    double k = 0.5 * p.c - 0.25 * p.eps / p.a;
    return -s2 / (2.0 * p.a) * k * std::exp(2.0 * p.a * (s - p.horizon)) -
           s2 * 0.25 * p.eps / p.a * (s - p.horizon) + s2 / (2.0 * p.a) * k;
}

double CoefficientSet::zeta1(double s) const { return eta1(s); }

double CoefficientSet::zeta2(double s) const {
    const auto& p = params;
    double ta = p.theta / p.a;
    return -ta * (p.c - p.eps / p.a) * std::exp(p.a * (s - p.horizon)) +
           ta * (p.c - 0.5 * p.eps / p.a) * std::exp(2.0 * p.a * (s - p.horizon)) -
           0.5 * p.theta * p.eps / (p.a * p.a);
}

double CoefficientSet::zeta3(double s) const {
    const auto& p = params;
    double s2 = p.sigma * p.sigma;
    double th2a2 = p.theta * p.theta / (p.a * p.a);
    double e1 = std::exp(p.a * (s - p.horizon));
    double e2 = std::exp(2.0 * p.a * (s - p.horizon));
    return (-p.r * p.theta - 0.5 * th2a2 * p.eps - 0.25 * p.eps * s2 / p.a) * (s - p.horizon) -
           th2a2 * (p.c - p.eps / p.a) * (e1 - 1.0) +
           (0.5 * th2a2 * (p.c - 0.5 * p.eps / p.a) -
            s2 / (2.0 * p.a) * (0.5 * p.c - 0.25 * p.eps / p.a)) *
               (e2 - 1.0);
}

double CoefficientSet::lambda1(double s) const { return eta1(s); }
double CoefficientSet::lambda2(double s) const { return -zeta2(s); }
double CoefficientSet::lambda3(double s) const { return zeta3(s); }

CoefficientSet coefficients(const SystemicRiskParams& params) {
    validate(params);
    if (params.a == 0.0)
        throw std::invalid_argument("coefficients: closed forms divide by a");
    return CoefficientSet{params};
}

namespace {

// Integrand t^(-alpha-1) e^(-t^2/2 - x t) in log form; beta = -alpha-1 > -1.
inline double log_integrand(double beta, double x, double t) {
    return beta * std::log(t) - 0.5 * t * t - x * t;
}

// Upper truncation point: integrand below 1e-18 of its bulk reference value.
double truncation_point(double beta, double x) {
    double t_peak = beta > 0.0 ? 0.5 * (-x + std::sqrt(x * x + 4.0 * beta))
                               : std::max(0.1, -x);
    double log_ref = log_integrand(beta, x, t_peak);
    for (double t : {0.1, 1.0}) log_ref = std::max(log_ref, log_integrand(beta, x, t));
    double t_hi = std::max(2.0 * t_peak, 4.0);
    for (int iter = 0; iter < 200; ++iter) {
        if (log_integrand(beta, x, t_hi) < log_ref - 41.5) break;  // ln(1e18)
        t_hi *= 1.5;
    }
    return t_hi;
}

// tanh-sinh quadrature of the integrand on (0, t_hi); handles the t^beta
// endpoint singularity for beta in (-1, 0).
double de_quadrature(double beta, double x, double t_hi, double rel_tol) {
    const double pi_half = 1.5707963267948966;
    const double u_max = 6.0;

    // t = t_hi * sigmoid(2s) evaluated in a cancellation-free form so the
    // endpoint singularity t^beta keeps its genuine tail mass.
    auto term = [&](double u) {
        double s = pi_half * std::sinh(u);
        double e2s = std::exp(-2.0 * std::abs(s));
        double denom = 1.0 + e2s;
        double t = s < 0.0 ? t_hi * e2s / denom : t_hi / denom;
        // dt/du = t_hi * pi * cosh(u) * e^{-2|s|} / (1 + e^{-2|s|})^2.
        double w = t_hi * 2.0 * pi_half * std::cosh(u) * e2s / (denom * denom);
        if (t <= 0.0 || t >= t_hi || w == 0.0) return 0.0;
        double f = std::exp(log_integrand(beta, x, t));
        return std::isfinite(f) ? f * w : 0.0;
    };

    double h = 0.5;
    double sum = term(0.0);
    for (double u = h; u <= u_max; u += h) sum += term(u) + term(-u);
    double integral = sum * h;

    for (int level = 0; level < 12; ++level) {
        h *= 0.5;
        for (double u = h; u <= u_max; u += 2.0 * h) sum += term(u) + term(-u);
        double refined = sum * h;
        if (level >= 3 && std::abs(refined - integral) <= rel_tol * std::abs(refined)) {
            return refined;
        }
        integral = refined;
    }
    return integral;
}

}  // namespace

double parabolic_cylinder_d(double alpha, double x, double rel_tol) {
    if (alpha >= 0.0)
        throw std::invalid_argument("parabolic_cylinder_d: integral form needs alpha < 0");
    double beta = -alpha - 1.0;
    double t_hi = truncation_point(beta, x);
    double integral = de_quadrature(beta, x, t_hi, rel_tol);
    if (!std::isfinite(integral))
        throw std::runtime_error("parabolic_cylinder_d: quadrature failed");
    return std::exp(-0.25 * x * x) / std::tgamma(-alpha) * integral;
}

double phi1_tilde(const SystemicRiskParams& p, double lambda, double y) {
    if (lambda >= 0.0) throw std::invalid_argument("phi1_tilde: lambda must be < 0");
    double kappa = std::sqrt(2.0 * p.a) / p.sigma;
    return std::exp(0.25 * kappa * kappa * y * y) *
           parabolic_cylinder_d(lambda / p.a, kappa * y);
}

double particular_solution_residual(const SystemicRiskParams& p, double lambda, double y) {
    if (lambda >= 0.0)
        throw std::invalid_argument("particular_solution_residual: lambda must be < 0");
    double k = (1.0 - 1.0 / lambda) * std::exp(-lambda * p.horizon);
    double A = p.eps / (4.0 * p.a - 2.0 * lambda) * k;
    double B = -p.sigma * p.sigma * p.eps / (lambda * (4.0 * p.a - 2.0 * lambda)) * k;
    double source = k * 0.5 * p.eps * y * y;
    // In centered coordinates the ODE reads lambda v - a y v' + sigma^2/2 v'' + source = 0.
    double v = A * y * y + B;
    double vp = 2.0 * A * y;
    double vpp = 2.0 * A;
    return source + lambda * v - p.a * y * vp + 0.5 * p.sigma * p.sigma * vpp;
}

double phi1_homogeneous_residual(const SystemicRiskParams& p, double lambda,
                                 double half_width, int n) {
    if (n < 3) throw std::invalid_argument("phi1_homogeneous_residual: need n >= 3");
    double dy = 2.0 * half_width / (n - 1);
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = phi1_tilde(p, lambda, -half_width + i * dy);
    double worst = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
        double y = -half_width + i * dy;
        double vp = (v[i + 1] - v[i - 1]) / (2.0 * dy);
        double vpp = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dy * dy);
        double r = lambda * v[i] - p.a * y * vp + 0.5 * p.sigma * p.sigma * vpp;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

LaplaceResiduals laplace_ode_residual(const SystemicRiskParams& p, double lambda,
                                      double half_width, int n) {
    if (lambda >= 0.0)
        throw std::invalid_argument("laplace_ode_residual: lambda must be < 0");
    LaplaceResiduals out;
    double dy = 2.0 * half_width / (n - 1);
    for (int i = 0; i < n; ++i) {
        double y = -half_width + i * dy;
        out.particular_max =
            std::max(out.particular_max, std::abs(particular_solution_residual(p, lambda, y)));
    }
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = phi1_tilde(p, lambda, -half_width + i * dy);
    out.homogeneous_profile.assign(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        double y = -half_width + i * dy;
        double vp = (v[i + 1] - v[i - 1]) / (2.0 * dy);
        double vpp = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dy * dy);
        double r = lambda * v[i] - p.a * y * vp + 0.5 * p.sigma * p.sigma * vpp;
        out.homogeneous_profile[i] = r;
        out.homogeneous_max = std::max(out.homogeneous_max, std::abs(r));
    }
    return out;
}

ModelSpec model_spec(const SystemicRiskParams& params) {
    validate(params);
    ModelConfig cfg;
    cfg.family = "systemic_risk";
    cfg.params = {{"a", params.a},         {"eps", params.eps}, {"c", params.c},
                  {"r", params.r},         {"sigma", params.sigma},
                  {"theta", params.theta}, {"T", params.horizon},
                  {"m", params.m0},        {"x_lo", params.m0 - 3.0},
                  {"x_hi", params.m0 + 3.0}};
    return build_model(cfg);
}

Grid make_centered_grid(const SystemicRiskParams& params, int nx, int nt) {
    if (nx % 2 == 0)
        throw std::invalid_argument("make_centered_grid: need an odd node count");
    ModelSpec spec = model_spec(params);
    if (nt <= 0) nt = cfl_time_nodes(spec, nx);
    return make_model_grid(spec, nx, nt);
}

SystemicSolution solve_systemic_hjb(const SystemicRiskParams& params, const Grid& grid) {
    validate(params);
    if (std::abs(grid.x_lo + grid.x_hi - 2.0 * params.m0) >
        1e-9 * (grid.x_hi - grid.x_lo))
        throw std::invalid_argument("solve_systemic_hjb: grid must be centered on m0");
    if (grid.nx % 2 == 0)
        throw std::invalid_argument("solve_systemic_hjb: grid must have an odd node count");

    ModelSpec spec = model_spec(params);
    spec.x_lo = grid.x_lo;
    spec.x_hi = grid.x_hi;

    // Frozen mean: a constant flow concentrated at m0 gives b = a(m0 - x) and
    // f = eps/2 (m0 - x)^2 exactly.
    Measure frozen = Measure::point_mass(grid, params.m0);
    MeasureFlow flow = MeasureFlow::constant(grid, frozen);

    SystemicSolution sol;
    sol.value = solve_hjb(spec, flow, grid);
    sol.policy = extract_policy(sol.value, spec);

    sol.boundary.h.assign(grid.nt, kInf);
    sol.boundary.x1.assign(grid.nt, -kInf);
    sol.boundary.x2.assign(grid.nt, kInf);
    bool any_region = false;
    for (int k = 0; k < grid.nt; ++k) {
        double lo = sol.policy.lower_boundary[k];
        double hi = sol.policy.upper_boundary[k];
        if (!std::isnan(lo) && !std::isnan(hi)) {
            sol.boundary.x1[k] = lo;
            sol.boundary.x2[k] = hi;
            sol.boundary.h[k] = 0.5 * (hi - lo);
            any_region = true;
        }
    }
    sol.boundary.degenerate = !any_region;
    return sol;
}

MeanDriftReport verify_fixed_point_mean(const SystemicRiskParams& params, const Grid& grid,
                                        int n_particles, uint64_t seed,
                                        bool allow_asymmetric_mu0, const Measure* mu0_override) {
    validate(params);
    if (params.rho != 0.0)
        throw std::invalid_argument("verify_fixed_point_mean: requires rho = 0");

    Measure mu0 = mu0_override ? *mu0_override : Measure::gaussian(grid, params.m0, 0.25);
    if (!allow_asymmetric_mu0) {
        double asym = 0.0;
        for (int i = 0; i < grid.nx; ++i)
            asym = std::max(asym, std::abs(mu0.density[i] - mu0.density[grid.nx - 1 - i]));
        if (asym > 1e-9)
            throw std::invalid_argument(
                "verify_fixed_point_mean: asymmetric mu0 needs the override flag");
    }

    auto sol = solve_systemic_hjb(params, grid);
    ModelSpec spec = model_spec(params);
    spec.x_lo = grid.x_lo;
    spec.x_hi = grid.x_hi;

    auto mv = simulate_mckean_vlasov(spec, sol.policy, mu0, n_particles, seed, grid);

    MeanDriftReport rep;
    rep.balance.reserve(grid.nt);
    for (int k = 0; k < grid.nt; ++k) {
        rep.max_mean_drift =
            std::max(rep.max_mean_drift, std::abs(mv.mean_path[k] - params.m0));
        double above = 0.0, below = 0.0;
        const auto& mu = mv.flow.at(k);
        double x1 = sol.boundary.x1[k], x2 = sol.boundary.x2[k];
        // Tie guard: a boundary landing exactly on a node must not be
        // counted on one side only through rounding of the node coordinates.
        const double tie = 1e-9 * grid.dx;
        for (int i = 0; i < grid.nx; ++i) {
            double x = grid.x(i);
            if (x - x2 > tie) above += mu.density[i];
            if (x1 - x > tie) below += mu.density[i];
        }
        rep.balance.push_back((above - below) * grid.dx);
    }
    rep.bound = 3.0 * params.sigma * std::sqrt(params.horizon / n_particles) + 2.0 * grid.dx;
    rep.within_bound = rep.max_mean_drift <= rep.bound;
    return rep;
}

CommonNoiseReport common_noise_reduction(const SystemicRiskParams& params, const Grid& grid,
                                         int n_particles, uint64_t seed) {
    validate(params);
    if (!(params.rho > 0.0))
        throw std::invalid_argument("common_noise_reduction: requires rho > 0");

    auto sol = solve_systemic_hjb(params, grid);
    const auto& policy = sol.policy;

    const int nt = grid.nt;
    const double dt = grid.dt, sqrt_dt = std::sqrt(dt);
    const double sig_common = params.sigma * params.rho;
    const double sig_idio = params.sigma * std::sqrt(1.0 - params.rho * params.rho);
    const double m0 = params.m0;

    Measure mu0 = Measure::gaussian(grid, m0, 0.25);
    std::vector<double> xa = sample_initial_positions(mu0, n_particles, seed);
    std::vector<double> xb = xa;

    auto mean_of = [&](const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) m += v;
        return m / x.size();
    };

    CommonNoiseReport rep;
    rep.expected_slope = sig_common;
    rep.d1_per_time.reserve(nt);

    // Centered law of the common-noise run vs the run with the common
    // component removed (same idiosyncratic draws).
    double w0 = 0.0;
    std::vector<double> mean_a(nt), dmean_a, dw0;
    mean_a[0] = mean_of(xa);
    {
        auto da = empirical_measure([&] {
            std::vector<double> c(xa);
            double m = mean_a[0];
            for (auto& v : c) v = std::clamp(v - m + m0, grid.x_lo, grid.x_hi);
            return c;
        }(), grid);
        auto db = empirical_measure(xb, grid);
        rep.d1_per_time.push_back(wasserstein(da.measure, db.measure, 1).value);
    }

    for (int k = 0; k + 1 < nt; ++k) {
        double ma = mean_of(xa);
        double mb = mean_of(xb);
        double z0 = rng::normal(seed, rng::kCommonStream, static_cast<uint64_t>(k));
        double dW0 = sqrt_dt * z0;

        parallel_for(n_particles, [&](int begin, int end) {
            for (int p = begin; p < end; ++p) {
                double zi = rng::normal(seed, static_cast<uint64_t>(p),
                                        static_cast<uint64_t>(k));
                // Common-noise run: thresholds recentered on the realized mean.
                double ua = policy.at(k, grid.nearest_node(xa[p] - ma + m0));
                double driftA = params.a * (ma - xa[p]) + ua;
                xa[p] += driftA * dt + sig_common * dW0 + sig_idio * sqrt_dt * zi;
                // Reference run: no common component.
                double ub = policy.at(k, grid.nearest_node(xb[p]));
                double driftB = params.a * (mb - xb[p]) + ub;
                xb[p] += driftB * dt + sig_idio * sqrt_dt * zi;
            }
        });

        double ma_new = mean_of(xa);
        dmean_a.push_back(ma_new - ma);
        dw0.push_back(dW0);
        w0 += dW0;
        mean_a[k + 1] = ma_new;
        rep.mean_track_max_err =
            std::max(rep.mean_track_max_err, std::abs(ma_new - (m0 + sig_common * w0)));

        std::vector<double> ca(xa);
        for (auto& v : ca) v = std::clamp(v - ma_new + m0, grid.x_lo, grid.x_hi);
        std::vector<double> cb(xb);
        for (auto& v : cb) v = std::clamp(v, grid.x_lo, grid.x_hi);
        auto da = empirical_measure(ca, grid);
        auto db = empirical_measure(cb, grid);
        rep.d1_per_time.push_back(wasserstein(da.measure, db.measure, 1).value);
    }
    rep.max_d1 = *std::max_element(rep.d1_per_time.begin(), rep.d1_per_time.end());

    // Regression through the origin of mean increments on the common increments.
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < dw0.size(); ++i) {
        sxy += dmean_a[i] * dw0[i];
        sxx += dw0[i] * dw0[i];
    }
    rep.regression_slope = sxy / sxx;
    double ss_res = 0.0;
    for (size_t i = 0; i < dw0.size(); ++i) {
        double e = dmean_a[i] - rep.regression_slope * dw0[i];
        ss_res += e * e;
    }
    int dof = static_cast<int>(dw0.size()) - 1;
    rep.regression_se = std::sqrt(ss_res / std::max(1, dof) / sxx);
    return rep;
}

}  // namespace mfg::systemic
