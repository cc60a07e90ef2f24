#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conelab/calabi_potential.hpp"
#include "conelab/collapse_geometry.hpp"
#include "conelab/fit.hpp"
#include "conelab/linalg.hpp"
#include "conelab/model_metric.hpp"
#include "conelab/quadrature.hpp"

namespace conelab {

enum class Variable { t, u, v, s };
enum class MetricTag { None, Calabi, TianYau, Glued };

struct RadialField {
    Variable variable = Variable::u;
    std::vector<double> grid;
    std::vector<double> values;
    MetricTag metric = MetricTag::None;

    RadialField() = default;
    RadialField(Variable var, std::vector<double> g, std::vector<double> v, MetricTag m = MetricTag::None)
        : variable(var), grid(std::move(g)), values(std::move(v)), metric(m) {
        validate();
    }

    void validate() const {
        detail::require(grid.size() == values.size(), "radial field: grid/value size mismatch");
        for (std::size_t i = 0; i + 1 < grid.size(); ++i)
            detail::require(grid[i + 1] > grid[i], "radial field: grid must increase strictly");
        for (double v : values) detail::require_finite(v, "radial field value");
    }
    std::size_t size() const { return grid.size(); }
};

// Quintic smoothstep: 0 for v <= 1/2, 1 for v >= 2, C^2 at both breakpoints.
struct Cutoff {
    static constexpr double lo = 0.5, hi = 2.0;

    // k-th derivative in v, k = 0..4
    static double eval(double v, int k = 0) {
        if (v <= lo || v >= hi) return (k == 0 && v >= hi) ? 1.0 : 0.0;
        const double w = hi - lo, s = (v - lo) / w;
        double d;
        switch (k) {
            case 0: return s * s * s * (10 - 15 * s + 6 * s * s);
            case 1: d = 30 * s * s * (1 - s) * (1 - s); break;
            case 2: d = 60 * s * (1 - 3 * s + 2 * s * s); break;
            case 3: d = 60 - 360 * s + 360 * s * s; break;
            case 4: d = -360 + 720 * s; break;
            default: throw DomainError("cutoff derivative order must be 0..4");
        }
        return d / std::pow(w, k);
    }
};

struct GlueConfig {
    int n = 2;
    double beta = 0.1;
    double mu = 0.8;

    GlueConfig() = default;
    GlueConfig(int n_, double b, double m) : n(n_), beta(b), mu(m) { validate(); }

    void validate() const {
        detail::require(n >= 1, "n must be >= 1");
        check_beta(beta);
        detail::require(mu > 0 && mu < 1, "mu must lie in (0, 1), got ", mu);
        detail::require(t_beta() < -1, "inadmissible (beta, mu): t_beta = ", t_beta(), " must be < -1");
    }
    double t_beta() const { return -std::pow(beta, -1 + mu); }
    double u_beta() const { return beta * t_beta(); }
    double p() const { return 1 + 1.0 / n; }
};

// t-derivatives 0..4
using Jet5 = std::array<double, 5>;

// beta^{1+1/n} (-n t/(n+1))^{1+1/n}
inline Jet5 ty_jet(int n, double beta, double t) {
    detail::require(t < 0, "Tian-Yau model needs t < 0");
    const double p = 1 + 1.0 / n, k = -n / (n + 1.0), y = k * t;
    Jet5 j{};
    double c = std::pow(beta, p);
    for (int i = 0; i < 5; ++i) {
        j[i] = c * std::pow(y, p - i);
        c *= (p - i) * k;
    }
    return j;
}

inline Jet5 calabi_jet(int n, double beta, double t) {
    const ScaledPotential sp(profile(Sign::Positive, n), beta);
    const auto j = sp.jet(t);
    return {j.phi, j.d1, j.d2, j.d3, j.d4};
}

struct GlueJet {
    Jet5 glued{}, calabi{}, ty{}, chi{};
};

inline GlueJet glue_jet(const GlueConfig& gc, double t) {
    detail::require(t < 0, "glued potential needs t < 0");
    GlueJet g;
    const double tb = gc.t_beta(), v = t / tb;
    for (int k = 0; k < 5; ++k) g.chi[k] = Cutoff::eval(v, k) / std::pow(tb, k);
    g.ty = ty_jet(gc.n, gc.beta, t);
    g.calabi = calabi_jet(gc.n, gc.beta, t);
    if (v >= Cutoff::hi) {
        g.glued = g.calabi;
        return g;
    }
    if (v <= Cutoff::lo) {
        g.glued = g.ty;
        return g;
    }
    static constexpr int binom[5][5] = {{1}, {1, 1}, {1, 2, 1}, {1, 3, 3, 1}, {1, 4, 6, 4, 1}};
    for (int k = 0; k < 5; ++k) {
        double s = g.ty[k];
        for (int i = 0; i <= k; ++i) s += binom[k][i] * g.chi[i] * (g.calabi[k - i] - g.ty[k - i]);
        g.glued[k] = s;
    }
    return g;
}

inline double glued_potential(const GlueConfig& gc, double t) { return glue_jet(gc, t).glued[0]; }

inline double residual_constant(int n, double beta) { return -std::log(n + 1.0) + (n + 1) * std::log(beta); }

// R, R', R'' of R = log((-phi')^{n-1} phi'') + phi - C_beta from a t-jet.
inline std::array<double, 3> residual_jet(int n, double beta, const Jet5& f) {
    const double d1 = f[1], d2 = f[2], d3 = f[3], d4 = f[4];
    if (!(d1 < 0 && d2 > 0))
        throw DomainError(detail::cat("nonpositive (-phi')^{n-1} phi'' (bad glue): phi' = ", d1,
                                      ", phi'' = ", d2));
    const double R = (n - 1) * std::log(-d1) + std::log(d2) + f[0] - residual_constant(n, beta);
    const double R1 = (n - 1) * d2 / d1 + d3 / d2 + d1;
    const double R2 = (n - 1) * (d3 / d1 - (d2 / d1) * (d2 / d1)) + d4 / d2 - (d3 / d2) * (d3 / d2) + d2;
    return {R, R1, R2};
}

// Residual of the glued potential on field.grid (variable t); values are ignored.
inline RadialField radial_residual(const GlueConfig& gc, const RadialField& field) {
    detail::require(field.variable == Variable::t, "radial_residual expects a t-field");
    std::vector<double> r;
    r.reserve(field.size());
    for (double t : field.grid) r.push_back(residual_jet(gc.n, gc.beta, glue_jet(gc, t).glued)[0]);
    return RadialField(Variable::t, field.grid, std::move(r), MetricTag::Glued);
}

inline RadialField glued_field(const GlueConfig& gc, const std::vector<double>& tgrid) {
    std::vector<double> v;
    for (double t : tgrid) v.push_back(glued_potential(gc, t));
    return RadialField(Variable::t, tgrid, std::move(v), MetricTag::Glued);
}

// w = chi(-u) + (1 - chi(-u)) max(-u, beta): 1 toward the divisor, |u| toward
// the Tian-Yau end, floored at beta.
inline double weight(double beta, double u) {
    const double c = Cutoff::eval(-u);
    return c + (1 - c) * std::max(-u, beta);
}

// |nabla^j f| for the dt-block of beta^{1+1/n} g_TY, g_tt = phi_TY''/2.
inline double weighted_derivative(const Jet5& ty, const std::array<double, 3>& f, int j) {
    const double gtt = ty[2] / 2;
    if (j == 0) return std::abs(f[0]);
    if (j == 1) return std::abs(f[1]) / std::sqrt(gtt);
    const double gamma = ty[3] / (2 * ty[2]);
    return std::abs(f[2] - gamma * f[1]) / gtt;
}

struct ZoneSups {
    double beta = 0;
    std::array<double, 3> difference{}, residual{}, cutoff{};  // glue zone, j = 0, 1, 2
    double calabi_zone_residual = 0;  // sup |R| on t <= 2 t_beta
    double ty_zone_defect = 0;        // sup |R - phi| on t >= t_beta / 2
    double weighted_residual = 0;     // sup w^{delta+1+1/n} |R|
};

struct ResidualScan {
    int n = 2;
    double mu = 0.8, delta = 0;
    std::vector<ZoneSups> per_beta;
    std::array<ScalingFit, 3> difference_fit, residual_fit, cutoff_fit;
    ScalingFit weighted_fit;
    std::array<double, 3> expected_difference{}, expected_residual{}, expected_cutoff{};
    double expected_weighted = 0;
};

inline ZoneSups zone_sups(const GlueConfig& gc, double delta = 0, int points = 801) {
    ZoneSups z;
    z.beta = gc.beta;
    const double tb = gc.t_beta();
    for (double t : linspace(2 * tb, tb / 2, points)) {
        const auto g = glue_jet(gc, t);
        std::array<double, 3> diff, chi;
        for (int k = 0; k < 3; ++k) {
            diff[k] = g.glued[k] - g.calabi[k];
            chi[k] = g.chi[k];
        }
        const auto R = residual_jet(gc.n, gc.beta, g.glued);
        for (int j = 0; j < 3; ++j) {
            z.difference[j] = std::max(z.difference[j], weighted_derivative(g.ty, diff, j));
            z.residual[j] = std::max(z.residual[j], weighted_derivative(g.ty, R, j));
            z.cutoff[j] = std::max(z.cutoff[j], weighted_derivative(g.ty, chi, j));
        }
    }
    const double p = gc.p();
    auto wsup = [&](double t, double R) {
        const double w = weight(gc.beta, gc.beta * t);
        z.weighted_residual = std::max(z.weighted_residual, std::pow(w, delta + p) * std::abs(R));
    };
    for (double s : logspace(1, 40, 120)) {
        const double t = 2 * tb * s;
        const double R = residual_jet(gc.n, gc.beta, glue_jet(gc, t).glued)[0];
        z.calabi_zone_residual = std::max(z.calabi_zone_residual, std::abs(R));
        wsup(t, R);
    }
    for (double s : logspace(1e-4, 1, 200)) {
        const double t = tb / 2 * s;
        const auto g = glue_jet(gc, t);
        const double R = residual_jet(gc.n, gc.beta, g.glued)[0];
        z.ty_zone_defect = std::max(z.ty_zone_defect, std::abs(R - g.glued[0]));
        wsup(t, R);
    }
    for (double t : linspace(2 * tb, tb / 2, points))
        wsup(t, residual_jet(gc.n, gc.beta, glue_jet(gc, t).glued)[0]);
    return z;
}

// Exponents are fitted against -u_beta = beta^mu.
inline ResidualScan residual_scaling_scan(int n, double mu, const std::vector<double>& betas,
                                          double delta = 0) {
    detail::require(betas.size() >= 3, "regression failure: need >= 3 beta values");
    ResidualScan s;
    s.n = n;
    s.mu = mu;
    s.delta = delta;
    std::vector<double> x;
    for (double b : betas) {
        s.per_beta.push_back(zone_sups(GlueConfig(n, b, mu), delta));
        x.push_back(std::pow(b, mu));
    }
    const double p = 1 + 1.0 / n;
    auto column = [&](auto get) {
        std::vector<double> y;
        for (const auto& z : s.per_beta) y.push_back(get(z));
        return y;
    };
    for (int j = 0; j < 3; ++j) {
        s.difference_fit[j] = loglog_fit(x, column([&](const ZoneSups& z) { return z.difference[j]; }));
        s.residual_fit[j] = loglog_fit(x, column([&](const ZoneSups& z) { return z.residual[j]; }));
        s.cutoff_fit[j] = loglog_fit(x, column([&](const ZoneSups& z) { return z.cutoff[j]; }));
        s.expected_difference[j] = (2 - j / 2.0) * p;
        s.expected_residual[j] = (1 - j / 2.0) * p;
        s.expected_cutoff[j] = -(j / 2.0) * p;
    }
    s.weighted_fit = loglog_fit(x, column([](const ZoneSups& z) { return z.weighted_residual; }));
    s.expected_weighted = 2 * p + delta;
    return s;
}

// ---- mode operator -------------------------------------------------------

// (2/phi'')(F'' - l^2 F/(4 beta^2)) + 2(n-1) F'/phi' at the interior nodes
// (three-point nonuniform differences, second order on smoothly graded grids).
inline RadialField mode_operator_apply(const PotentialProfile& p, double beta, int ell,
                                       const RadialField& F) {
    require_positive(p, "mode_operator_apply");
    detail::require(F.variable == Variable::u, "mode operator acts on u-fields");
    detail::require(ell >= 0, "ell must be >= 0");
    detail::require(beta > 0 && beta <= 1, "beta must lie in (0, 1]");
    const auto& u = F.grid;
    const auto& f = F.values;
    const std::size_t m = u.size();
    detail::require(m >= 3, "grid too coarse: need at least 3 nodes");
    if (ell > 0) {
        double hmax = 0;
        for (std::size_t i = 0; i + 1 < m; ++i) hmax = std::max(hmax, u[i + 1] - u[i]);
        if (hmax > beta / (4.0 * ell))
            throw DomainError(detail::cat("grid too coarse: spacing ", hmax, " exceeds beta/(4 l) = ",
                                          beta / (4.0 * ell)));
    }
    const double k2 = ell * ell / (4 * beta * beta);
    std::vector<double> x, y;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const double hm = u[i] - u[i - 1], hp = u[i + 1] - u[i];
        const double f2 = 2 * ((f[i + 1] - f[i]) / hp - (f[i] - f[i - 1]) / hm) / (hp + hm);
        const double f1 = (hm * hm * f[i + 1] - hp * hp * f[i - 1] + (hp * hp - hm * hm) * f[i]) /
                          (hp * hm * (hp + hm));
        const auto j = p.jet(u[i]);
        x.push_back(u[i]);
        y.push_back(2 / j.d2 * (f2 - k2 * f[i]) + 2 * (p.n() - 1) * f1 / j.d1);
    }
    return RadialField(Variable::u, std::move(x), std::move(y), MetricTag::Calabi);
}

// Exact action on a smooth F given F, F', F''.
inline double mode_operator_exact(const PotentialProfile& p, double beta, int ell, double u,
                                  double f, double f1, double f2) {
    const auto j = p.jet(u);
    return 2 / j.d2 * (f2 - ell * ell / (4 * beta * beta) * f) + 2 * (p.n() - 1) * f1 / j.d1;
}

// Nodes equidistributed in arclength (uniform in s), so spacing ~ 1/sqrt(phi'').
inline std::vector<double> graded_grid(const PotentialProfile& p, double ua, double ub, int m = 2049) {
    require_positive(p, "graded_grid");
    detail::require(ua < ub && ub < 0 && m >= 3, "graded_grid needs ua < ub < 0 and m >= 3");
    const double sa = to_moment_coords(p, ua).s, sb = to_moment_coords(p, ub).s;
    std::vector<double> g;
    for (double s : linspace(sa, sb, m)) g.push_back(from_s(p, s));
    g.front() = ua;
    g.back() = ub;
    return g;
}

// ---- kernel of the limit operator ------------------------------------------

struct KernelReport {
    RadialField first, second;          // phi_1', f = -g phi_1'
    double residual_first = 0, residual_second = 0;            // sup phi_1'' |1/2 Delta f + f|, grid m
    double residual_first_fine = 0, residual_second_fine = 0;  // grid 2m - 1
    double order_first = 0, order_second = 0;
    double slope_minus_infinity = 0;
    double orthogonality = 0, orthogonality_expected = 0;
};

namespace detail {

// g(u) = int_{-1}^u du' / (-phi_1')^{n+1} = int_{-1}^u du' / (1 - e^{-phi_1})
inline double kernel_g(const PotentialProfile& p, double u) {
    auto f = [&](double v) { return 1 / -std::expm1(-p.phi1(v)); };
    if (u == -1) return 0;
    const double a = std::min(u, -1.0), b = std::max(u, -1.0);
    double I;
    try {
        I = integrate(f, a, b, 1e-13, 1e-13).value;
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(cat("quadrature failure near u = 0: ", e.what()));
    }
    return u < -1 ? -I : I;
}

// sup phi_1'' |1/2 L f + f|, i.e. the defect of f'' + (n-1)(phi_1''/phi_1') f' + phi_1'' f = 0
inline double limit_residual(const PotentialProfile& p, const RadialField& f) {
    const auto L = mode_operator_apply(p, 1, 0, f);
    double r = 0;
    for (std::size_t i = 0; i < L.size(); ++i)
        r = std::max(r, p.jet(L.grid[i]).d2 * std::abs(L.values[i] / 2 + f.values[i + 1]));
    return r;
}

}  // namespace detail

inline KernelReport kernel_solutions(const PotentialProfile& p, double ua = -12, double ub = -0.05,
                                     int m = 801) {
    require_positive(p, "kernel_solutions");
    KernelReport k;
    auto fields = [&](int mm) {
        const auto grid = graded_grid(p, ua, ub, mm);
        std::vector<double> a, b;
        for (double u : grid) {
            const double d1 = p.jet(u).d1;
            a.push_back(d1);
            b.push_back(-detail::kernel_g(p, u) * d1);
        }
        return std::pair{RadialField(Variable::u, grid, a, MetricTag::Calabi),
                         RadialField(Variable::u, grid, b, MetricTag::Calabi)};
    };
    auto [f1, f2] = fields(m);
    auto [g1, g2] = fields(2 * m - 1);
    k.residual_first = detail::limit_residual(p, f1);
    k.residual_second = detail::limit_residual(p, f2);
    k.residual_first_fine = detail::limit_residual(p, g1);
    k.residual_second_fine = detail::limit_residual(p, g2);
    k.order_first = std::log2(k.residual_first / k.residual_first_fine);
    k.order_second = std::log2(k.residual_second / k.residual_second_fine);
    k.first = std::move(f1);
    k.second = std::move(f2);

    // slope of f = -g phi_1' on u in [-40, -30]
    std::vector<double> us = linspace(-40, -30, 11), fs;
    for (double u : us) fs.push_back(-detail::kernel_g(p, u) * p.jet(u).d1);
    k.slope_minus_infinity = linear_fit(us, fs).exponent;

    // int phi_1' phi_1'' (phi_1')^{n-1} du = (-1)^n / (n+1) via x = -phi_1'
    const int n = p.n();
    auto integrand = [&](double u) {
        const auto j = p.jet(u);
        return j.d2 * std::pow(j.d1, n);
    };
    double I = detail::integrate_left(integrand, -std::numeric_limits<double>::infinity(), -1.0, 1e-13).value;
    auto g = [&](double y) { return integrand(-std::pow(y, n)) * n * std::pow(y, n - 1); };
    I += integrate(g, 0.0, 1.0, 1e-13, 1e-13).value;
    k.orthogonality = I;
    k.orthogonality_expected = (n % 2 ? -1.0 : 1.0) / (n + 1);
    return k;
}

// ---- mode decay ------------------------------------------------------------

struct ModeDecayReport {
    double beta = 0, u0 = 0, eps = 0;
    int ell = 0;
    double u_left = 0, u_right = 0;    // E_{u0}(eps)
    double u_left_half = 0, u_right_half = 0;
    double sup_half = 0;               // sup over E_{u0}(eps/2), boundary data 1
    double ratio = 0;                  // sup_half / (beta / l^2)
    double barrier = 0;                // cosh(eps gamma l u0 / (2 beta)) / cosh(eps gamma l u0 / beta)
    double weight = 1;
    int nodes = 0;
};

// r_0(u): distance to u = 0 in g/beta restricted to the u-line.
inline double r0_of_u(const PotentialProfile& p, double u) {
    return std::sqrt(2.0 / (p.n() + 1)) * (pi / 2 - to_moment_coords(p, u).s);
}

inline double u_of_r0(const PotentialProfile& p, double r) {
    const double s = pi / 2 - r / std::sqrt(2.0 / (p.n() + 1));
    detail::require(s > 0 && s < pi / 2, "r_0 outside the model range");
    return from_s(p, s);
}

inline ModeDecayReport mode_decay_check(const PotentialProfile& p, double beta, int ell, double u0,
                                        double eps = 0.5, double gamma = 0.5, int min_nodes = 4001) {
    require_positive(p, "mode_decay_check");
    check_beta(beta);
    detail::require(ell >= 1, "mode decay needs ell >= 1");
    detail::require(u0 < -beta, "u0 must satisfy u0 < -beta/A (A = 1 here)");
    detail::require(eps > 0 && eps < 1, "eps must lie in (0, 1)");
    ModeDecayReport r;
    r.beta = beta;
    r.ell = ell;
    r.u0 = u0;
    r.eps = eps;
    r.weight = weight(beta, u0);
    const double r00 = r0_of_u(p, u0);
    r.u_left = u_of_r0(p, (1 + eps) * r00);
    r.u_right = u_of_r0(p, (1 - eps) * r00);
    r.u_left_half = u_of_r0(p, (1 + eps / 2) * r00);
    r.u_right_half = u_of_r0(p, (1 - eps / 2) * r00);

    // F'' + (n-1)(phi''/phi') F' - k^2 F = 0, F = 1 on the boundary
    const double k2 = ell * ell / (4 * beta * beta);
    const double hmax = beta / (16.0 * ell);
    const int m = std::max(min_nodes, static_cast<int>(std::ceil((r.u_right - r.u_left) / hmax)) + 1);
    const auto u = linspace(r.u_left, r.u_right, m);
    const double h = u[1] - u[0];
    std::vector<double> a(m, 0), b(m, 1), c(m, 0), d(m, 0);
    d.front() = d.back() = 1;
    for (int i = 1; i + 1 < m; ++i) {
        const auto j = p.jet(u[i]);
        const double q = (p.n() - 1) * j.d2 / j.d1;
        a[i] = 1 / (h * h) - q / (2 * h);
        c[i] = 1 / (h * h) + q / (2 * h);
        b[i] = -2 / (h * h) - k2;
    }
    std::vector<double> F;
    try {
        F = solve_tridiagonal(a, b, c, d);
    } catch (const DomainError& e) {
        throw ConvergenceError(detail::cat("BVP solver failure: ", e.what()));
    }
    for (int i = 0; i < m; ++i)
        if (u[i] >= r.u_left_half && u[i] <= r.u_right_half) r.sup_half = std::max(r.sup_half, std::abs(F[i]));
    r.ratio = r.sup_half / (beta / (ell * ell));
    const double z = eps * gamma * ell * std::abs(u0) / beta;
    r.barrier = z > 700 ? std::exp(-z / 2) : std::cosh(z / 2) / std::cosh(z);
    r.nodes = m;
    return r;
}

// ---- radial Newton solve ---------------------------------------------------

enum class InitialGuess { Glued, Exact };

struct NewtonStep {
    int iteration = 0;
    double residual = 0;    // sup over collocation equations
    double correction = 0;  // sup |delta phi|
    double worst_u = 0;     // location of the residual sup
    double step = 0;        // accepted step length
};

struct NewtonResult {
    std::vector<double> u, tau, phi, initial;
    std::vector<NewtonStep> trace;
    bool converged = false;
    int iterations = 0;
    double final_residual = 0;
    double max_error_vs_exact = 0;       // sup |phi - phi_{beta,L}| after normalization
    double normalization_constant = 0;   // applied shift (left-end difference)
    double correction_norm = 0;          // sup |phi - initial|
    bool quadratic_tail = false;
    double terminal_order = 0;
    RadialField field() const { return RadialField(Variable::u, u, phi, MetricTag::Glued); }
};

struct NewtonOptions {
    double u_left = -8;
    double u_right = -1e-4;
    int nodes_per_element = 48;
    double damping = 1;
    int max_iter = 60;
    double tol = 1e-10;
    InitialGuess initial = InitialGuess::Glued;
};

// Solves R(phi) = 0 in u on [u_left, u_right], written in tau = log(-u) as
//   (n-1)(log Phi_tau - tau) + log(Phi_tautau - Phi_tau) - 2 tau + Phi + log(n+1) = 0,
// with Phi = G (1 + w), G the initial guess (analytic derivatives) and w the
// unknown. Three Chebyshev elements broken at 2 u_beta and u_beta / 2; w and
// w_tau continuous across them, w = 0 at both ends.
inline NewtonResult newton_solve_radial(const GlueConfig& gc, const NewtonOptions& opt = {}) {
    gc.validate();
    const int n = gc.n, N = opt.nodes_per_element;
    const double ub = gc.u_beta();
    detail::require(opt.u_left < 2 * ub && opt.u_right > ub / 2 && opt.u_right < 0,
                    "Newton domain must contain the glue zone");
    detail::require(N >= 8, "need at least 8 nodes per element");
    detail::require(opt.damping > 0 && opt.damping <= 1, "damping must lie in (0, 1]");
    const std::array<double, 4> taus = {std::log(-opt.u_right), std::log(-ub / 2), std::log(-2 * ub),
                                        std::log(-opt.u_left)};
    std::array<ChebElement, 3> el;
    for (int e = 0; e < 3; ++e) el[e] = cheb_element(taus[e], taus[e + 1], N);
    const int M = 3 * (N + 1);

    // G, G_tau, G_tautau - G_tau at each node
    Eigen::VectorXd G(M), G1(M), Gd(M), tau(M), uu(M);
    for (int e = 0; e < 3; ++e)
        for (int k = 0; k <= N; ++k) {
            const int i = e * (N + 1) + k;
            tau[i] = el[e].x[k];
            uu[i] = -std::exp(tau[i]);
            const double t = uu[i] / gc.beta;
            const Jet5 g = opt.initial == InitialGuess::Exact ? calabi_jet(n, gc.beta, t) : glue_jet(gc, t).glued;
            G[i] = g[0];
            G1[i] = t * g[1];
            Gd[i] = t * t * g[2];
        }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(M);
    auto blocks = [&](const Eigen::VectorXd& x, Eigen::VectorXd& d1, Eigen::VectorXd& d2) {
        d1.resize(M);
        d2.resize(M);
        for (int e = 0; e < 3; ++e) {
            const auto seg = x.segment(e * (N + 1), N + 1);
            d1.segment(e * (N + 1), N + 1) = el[e].D * seg;
            d2.segment(e * (N + 1), N + 1) = el[e].D2 * seg;
        }
    };
    auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& Fv, Eigen::MatrixXd* J) {
        Eigen::VectorXd w1, w2;
        blocks(x, w1, w2);
        Fv.setZero(M);
        if (J) J->setZero(M, M);
        for (int e = 0; e < 3; ++e)
            for (int k = 1; k < N; ++k) {
                const int i = e * (N + 1) + k;
                const double P = G[i] * (1 + x[i]);
                const double P1 = G1[i] * (1 + x[i]) + G[i] * w1[i];
                const double Pd = Gd[i] * (1 + x[i]) + (2 * G1[i] - G[i]) * w1[i] + G[i] * w2[i];
                if (!(P1 > 0 && Pd > 0))
                    throw ConvergenceError(detail::cat("divergence: nonpositive Monge-Ampere factor at u = ", uu[i]));
                Fv[i] = (n - 1) * (std::log(P1) - tau[i]) + std::log(Pd) - 2 * tau[i] + P + std::log(n + 1.0);
                if (!J) continue;
                // dF/dw_j for nodes j of element e
                for (int q = 0; q <= N; ++q) {
                    const int jj = e * (N + 1) + q;
                    const double dw = q == k ? 1.0 : 0.0;
                    const double dP = G[i] * dw;
                    const double dP1 = G1[i] * dw + G[i] * el[e].D(k, q);
                    const double dPd = Gd[i] * dw + (2 * G1[i] - G[i]) * el[e].D(k, q) + G[i] * el[e].D2(k, q);
                    (*J)(i, jj) = (n - 1) * dP1 / P1 + dPd / Pd + dP;
                }
            }
        // boundary rows: Dirichlet at the two ends, C^1 matching at the interfaces
        // (value continuity of Phi in the first row, tau-derivative of Phi in the last)
        auto set = [&](int row, double val) { Fv[row] = val; };
        set(0, x[0]);
        if (J) (*J)(0, 0) = 1;
        const int last = M - 1;
        set(last, x[last]);
        if (J) (*J)(last, last) = 1;
        for (int e = 0; e < 2; ++e) {
            const int a = e * (N + 1) + N, b = (e + 1) * (N + 1);
            set(a, G[a] * x[a] - G[b] * x[b] + (G[a] - G[b]));
            const double da = G1[a] * x[a] + G[a] * w1[a] + G1[a];
            const double db = G1[b] * x[b] + G[b] * w1[b] + G1[b];
            set(b, da - db);
            if (J) {
                (*J)(a, a) += G[a];
                (*J)(a, b) -= G[b];
                (*J)(b, a) += G1[a];
                (*J)(b, b) -= G1[b];
                for (int q = 0; q <= N; ++q) {
                    (*J)(b, e * (N + 1) + q) += G[a] * el[e].D(N, q);
                    (*J)(b, (e + 1) * (N + 1) + q) -= G[b] * el[e + 1].D(0, q);
                }
            }
        }
    };

    NewtonResult res;
    Eigen::VectorXd Fv;
    Eigen::MatrixXd J;
    for (int it = 0;; ++it) {
        residual(w, Fv, &J);
        Eigen::Index imax;
        const double rn = Fv.cwiseAbs().maxCoeff(&imax);
        NewtonStep st{it, rn, 0, uu[imax]};
        if (rn < opt.tol) {
            res.trace.push_back(st);
            res.converged = true;
            res.iterations = it;
            res.final_residual = rn;
            break;
        }
        if (it >= opt.max_iter || !std::isfinite(rn)) {
            res.trace.push_back(st);
            res.iterations = it;
            res.final_residual = rn;
            break;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        const Eigen::VectorXd dw = lu.solve(-Fv);
        if (!(lu.rcond() > 1e-14) || !dw.allFinite()) throw ConvergenceError("singular linearization");
        // backtracking on the residual sup-norm
        double lam = opt.damping;
        for (;; lam /= 2) {
            if (lam < 1e-6)
                throw ConvergenceError(detail::cat("divergence: no descent after ", it, " iterations, residual ", rn));
            Eigen::VectorXd trial = w + lam * dw, Ft;
            try {
                residual(trial, Ft, nullptr);
            } catch (const ConvergenceError&) {
                continue;
            }
            if (Ft.lpNorm<Eigen::Infinity>() < (1 - 1e-4 * lam) * rn) break;
        }
        w += lam * dw;
        st.correction = (G.array() * dw.array()).abs().maxCoeff() * lam;
        st.step = lam;
        res.trace.push_back(st);
    }

    for (int i = 0; i < M; ++i) {
        res.u.push_back(uu[i]);
        res.tau.push_back(tau[i]);
        res.initial.push_back(G[i]);
        res.phi.push_back(G[i] * (1 + w[i]));
    }
    // store in increasing u, dropping the duplicated interface nodes
    std::vector<std::size_t> idx;
    for (int i = M - 1; i >= 0; --i) {
        const int k = i % (N + 1);
        if (k == N && i != M - 1) continue;
        idx.push_back(i);
    }
    auto pick = [&](const std::vector<double>& v) {
        std::vector<double> o;
        for (auto i : idx) o.push_back(v[i]);
        return o;
    };
    res.u = pick(res.u);
    res.tau = pick(res.tau);
    res.phi = pick(res.phi);
    res.initial = pick(res.initial);

    const auto& p = profile(Sign::Positive, n);
    res.normalization_constant = res.phi.front() - p.phi1(res.u.front());
    for (std::size_t i = 0; i < res.u.size(); ++i) {
        res.max_error_vs_exact = std::max(
            res.max_error_vs_exact, std::abs(res.phi[i] - res.normalization_constant - p.phi1(res.u[i])));
        res.correction_norm = std::max(res.correction_norm, std::abs(res.phi[i] - res.initial[i]));
    }
    // terminal order: max of log r_{k+1} / log r_k over steps with r_k < 1e-2
    // and r_{k+1} above the rounding floor
    const auto& tr = res.trace;
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
        const double r0 = tr[k].residual, r1 = tr[k + 1].residual;
        if (r0 < 1e-2 && r1 > 1e-13 && r1 < r0)
            res.terminal_order = std::max(res.terminal_order, std::log(r1) / std::log(r0));
    }
    res.quadratic_tail = res.converged && (res.iterations == 0 || res.terminal_order >= 1.7);
    return res;
}

}  // namespace conelab
