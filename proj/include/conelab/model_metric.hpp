#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "conelab/calabi_potential.hpp"
#include "conelab/fit.hpp"

namespace conelab {

// g = coeff_du2 du^2 + coeff_eta2 eta^2 + coeff_gD g_D in the variable u = beta t
struct MetricSample {
    double u = 0, beta = 0;
    double coeff_du2 = 0, coeff_eta2 = 0, coeff_gD = 0;
};

struct MomentCoords {
    double x = 0, s = 0;
};

struct MetricInS {
    double coeff_ds2 = 0, coeff_eta2 = 0, coeff_gD = 0;
};

inline void check_beta(double beta) {
    detail::require(beta > 0 && beta < 1, "beta must lie in (0, 1), got ", beta);
}

inline MetricSample metric_at(const PotentialProfile& p, double beta, double u) {
    detail::require(u < 0, "metric_at needs u < 0, got ", u);
    detail::require(beta > 0 && beta <= 1, "beta must lie in (0, 1], got ", beta);
    const auto j = p.jet(u);
    MetricSample m;
    m.u = u;
    m.beta = beta;
    m.coeff_du2 = j.d2 / 2;
    m.coeff_eta2 = 2 * beta * beta * j.d2;
    m.coeff_gD = -beta * sigma(p.sign()) * j.d1;
    return m;
}

// beta^n phi_1'' x^{n-1}, x = -sigma phi_1'
inline double volume_density(const PotentialProfile& p, double beta, double u) {
    const auto j = p.jet(u);
    const double x = -sigma(p.sign()) * j.d1;
    return std::pow(beta, p.n()) * j.d2 * std::pow(x, p.n() - 1);
}

inline void require_positive(const PotentialProfile& p, const char* what) {
    if (p.sign() != Sign::Positive)
        throw DomainError(detail::cat(what, ": positive case only"));
}

// x = -phi_1', cos s = x^{(n+1)/2}; since x^{n+1} = 1 - e^{-phi},
// sin s = e^{-phi/2}.
inline MomentCoords moment_from_phi(const PotentialProfile& p, double phi) {
    MomentCoords c;
    c.x = std::pow(-std::expm1(-phi), p.a());
    c.s = std::atan2(std::exp(-phi / 2), std::sqrt(-std::expm1(-phi)));
    return c;
}

inline MomentCoords to_moment_coords(const PotentialProfile& p, double u) {
    require_positive(p, "to_moment_coords");
    detail::require(u < 0, "to_moment_coords needs u < 0");
    return moment_from_phi(p, p.phi1(u));
}

// Inverse of to_moment_coords: phi = -2 log sin s, u = -F_+(phi).
inline double from_s(const PotentialProfile& p, double s) {
    require_positive(p, "from_s");
    detail::require(s > 0 && s < pi / 2, "from_s needs s in (0, pi/2), got ", s);
    const double c = std::cos(s), sn = std::sin(s);
    // near pi/2, sin^2 s rounds to 1; use cos there
    const double phi = s < pi / 4 ? -2 * std::log(sn) : -std::log1p(-c * c);
    return -p.F(phi);
}

inline MetricInS metric_in_s(const PotentialProfile& p, double beta, double s) {
    require_positive(p, "metric_in_s");
    detail::require(s > 0 && s < pi / 2, "metric_in_s needs s in (0, pi/2)");
    const int n = p.n();
    const double c = std::cos(s), sn = std::sin(s);
    MetricInS m;
    m.coeff_ds2 = 2.0 / (n + 1);
    m.coeff_gD = beta * std::pow(c, 2.0 / (n + 1));
    m.coeff_eta2 = 2.0 / (n + 1) * beta * beta * sn * sn / std::pow(c, 2.0 * (n - 1) / (n + 1));
    return m;
}

// metric_at composed with from_s; ds^2 from a numerical du/ds.
inline MetricInS metric_pullback(const PotentialProfile& p, double beta, double s) {
    const double u = from_s(p, s);
    const auto m = metric_at(p, beta, u);
    const double h = 1e-3 * std::min(s, pi / 2 - s);
    const double duds = ridders_derivative([&](double x) { return from_s(p, x); }, s, h);
    return {m.coeff_du2 * duds * duds, m.coeff_eta2, m.coeff_gD};
}

struct CurvatureReport {
    double u = 0, beta = 0;
    std::array<double, 4> q{};      // closed forms in x = e^{-sigma phi}
    std::array<double, 4> q_ode{};  // from phi', ..., phi'''' of the ODE
    double max_abs_q = 0;
    double bound_estimate = 0;      // positive case: 1/(1-e^{-phi}) + 1/(beta p)
    double disagreement = 0;        // max_i |q_i - q_ode_i| / max(1, |q_i|)
    double one_minus_x = 0;         // 1 - e^{-phi} (positive case)
};

// q1 = (log phi'')''/phi'', q2 = (log(-sigma phi'))''/phi'',
// q3 = (log phi'')'/phi',  q4 = (log(-sigma phi'))'/phi'.
inline std::array<double, 4> curvature_closed_form(const PotentialProfile& p, double phi) {
    const double n = p.n();
    if (p.sign() == Sign::Negative) {
        // x = e^{phi}, 1 - sigma x = 1 + x; written via g = x/(1+x)
        const double g = 1 / (1 + std::exp(-phi)), h = 1 - g;
        return {((-n * n + n + 2) * h + 2 * g) / (n + 1), ((n + 1) * h + g) / (n + 1),
                ((n + 1) * h + 2 * g) / (n + 1), g / (n + 1)};
    }
    // numerators rewritten in om = 1 - x to avoid cancellation near x = 1
    const double x = std::exp(-phi), om = -std::expm1(-phi);
    const double D = (n + 1) * om;
    return {-(n * (1 - n) + 2 * om) / D, -(n + om) / D, -(n - 1 + 2 * om) / D, x / D};
}

// Chain rule on log phi'' as a function of phi:
//   (log phi'')'  = G phi',          G = d log phi'' / d phi
//   (log phi'')'' = G' phi'^2 + G phi''
//   (log(-sigma phi'))'' = G phi'' - (phi''/phi')^2
inline std::array<double, 4> curvature_from_jet(const PhiJet& j) {
    const double r = j.d2 / (j.d1 * j.d1);
    return {j.ddlog2 / r + j.dlog2, j.dlog2 - r, j.dlog2, r};
}

inline CurvatureReport curvature_quantities(const PotentialProfile& p, double beta, double u) {
    detail::require(u < 0, "curvature_quantities needs u < 0");
    detail::require(beta > 0 && beta <= 1, "beta must lie in (0, 1]");
    const auto j = p.jet(u);
    CurvatureReport r;
    r.u = u;
    r.beta = beta;
    r.q = curvature_closed_form(p, j.phi);
    r.q_ode = curvature_from_jet(j);
    for (int i = 0; i < 4; ++i) {
        r.max_abs_q = std::max(r.max_abs_q, std::abs(r.q[i]));
        r.disagreement = std::max(r.disagreement, std::abs(r.q[i] - r.q_ode[i]) /
                                                      std::max(1.0, std::abs(r.q[i])));
    }
    if (p.sign() == Sign::Positive) {
        r.one_minus_x = -std::expm1(-j.phi);
        r.bound_estimate = 1 / r.one_minus_x + 1 / (beta * std::pow(r.one_minus_x, p.a()));
    } else {
        r.bound_estimate = 1;
    }
    return r;
}

struct CurvatureScan {
    double max_q = 0;        // sup over grid and betas
    double C = 0;            // sup of max|q| / bound (positive case)
    double max_disagreement = 0;
    std::vector<double> per_beta_max;  // max_abs_q per beta
    std::vector<double> per_beta_C;
};

inline CurvatureScan curvature_scan(const PotentialProfile& p, const std::vector<double>& betas,
                                    const std::vector<double>& ugrid) {
    CurvatureScan s;
    for (double b : betas) {
        double mq = 0, mc = 0;
        for (double u : ugrid) {
            const auto r = curvature_quantities(p, b, u);
            mq = std::max(mq, r.max_abs_q);
            mc = std::max(mc, r.max_abs_q / r.bound_estimate);
            s.max_disagreement = std::max(s.max_disagreement, r.disagreement);
        }
        s.per_beta_max.push_back(mq);
        s.per_beta_C.push_back(mc);
        s.max_q = std::max(s.max_q, mq);
        s.C = std::max(s.C, mc);
    }
    return s;
}

// Exponent of max|q_i| against 1 - e^{-phi} as u -> 0^- (positive case).
inline ScalingFit curvature_divergence_fit(const PotentialProfile& p,
                                           const std::vector<double>& ugrid) {
    require_positive(p, "curvature_divergence_fit");
    std::vector<double> x, y;
    for (double u : ugrid) {
        const auto r = curvature_quantities(p, 0.5, u);
        x.push_back(r.one_minus_x);
        y.push_back(r.max_abs_q);
    }
    return loglog_fit(x, y, 8);
}

// phi_1'(u) + c'_n (-u)^{1/n} against -u near 0 (positive case).
inline ScalingFit derivative_expansion_fit(const PotentialProfile& p,
                                           const std::vector<double>& ugrid) {
    require_positive(p, "derivative_expansion_fit");
    std::vector<double> x, y;
    const double cp = c_prime_n(p.n());
    for (double u : ugrid) {
        const auto j = p.jet(u);
        x.push_back(-u);
        y.push_back(j.d1 + cp * std::pow(-u, 1.0 / p.n()));
    }
    return loglog_fit(x, y, 8);
}

// Largest relative deviation of (du^2, eta^2, g_D) coefficients from
// (2/(n+1))(dr^2 + beta^2 r^2 eta^2) + beta g_D with r = e^{(u + K)/2},
// K = J_n (pos) or I_n (neg); fitted against r.
inline ScalingFit near_divisor_fit(const PotentialProfile& p, const std::vector<double>& ugrid,
                                   double beta = 0.1) {
    const double K = p.sign() == Sign::Positive ? p.J_n() : p.I_n();
    std::vector<double> x, y;
    for (double u : ugrid) {
        const auto m = metric_at(p, beta, u);
        const double r = std::exp((u + K) / 2);
        const double c = 2.0 / (p.n() + 1);
        // dr/du = r/2
        const double dev = std::max({std::abs(m.coeff_du2 / (c * r * r / 4) - 1),
                                     std::abs(m.coeff_eta2 / (c * beta * beta * r * r) - 1),
                                     std::abs(m.coeff_gD / beta - 1)});
        x.push_back(r);
        y.push_back(dev);
    }
    return loglog_fit(x, y, 8);
}

enum class Zone { BetaTtoZero, Middle, BetaTtoMinusInfinity };

inline const char* to_string(Zone z) {
    switch (z) {
        case Zone::BetaTtoZero: return "beta_t_to_zero";
        case Zone::Middle: return "middle";
        default: return "beta_t_to_minus_infinity";
    }
}

struct ZoneComparison {
    std::vector<double> t, ratio_xi, ratio_theta;
    double max_deviation = 0;  // max |ratio - 1|
    double K = 1;              // max(ratio, 1/ratio)
};

// Ratios of the Calabi model (xi-xi-bar and theta_D coefficients) to the
// zone model, negative case.
inline ZoneComparison cusp_zone_comparison(int n, double beta, Zone zone,
                                           const std::vector<double>& tgrid) {
    check_beta(beta);
    const auto& p = profile(Sign::Negative, n);
    const double a_n = std::exp(p.I_n()) / (n + 1);
    ZoneComparison z;
    for (double t : tgrid) {
        const double u = beta * t;
        bool ok = false;
        switch (zone) {
            case Zone::BetaTtoZero: ok = u > -1e-2 && u < 0; break;
            case Zone::Middle: ok = u >= -3 && u <= -1.0 / 3; break;
            case Zone::BetaTtoMinusInfinity: ok = u < -10; break;
        }
        if (!ok)
            throw DomainError(detail::cat("zone/grid mismatch: beta t = ", u, " outside zone ",
                                          to_string(zone)));
        const auto j = p.jet(u);
        const double xi = beta * beta * j.d2, th = beta * j.d1;
        double mxi, mth;
        switch (zone) {
            case Zone::BetaTtoZero: mxi = (n + 1) / (t * t); mth = (n + 1) / -t; break;
            case Zone::Middle: mxi = beta * beta * std::exp(u); mth = beta; break;
            default: mxi = a_n * beta * beta * std::exp(u); mth = beta; break;
        }
        z.t.push_back(t);
        z.ratio_xi.push_back(xi / mxi);
        z.ratio_theta.push_back(th / mth);
        for (double r : {xi / mxi, th / mth}) {
            z.max_deviation = std::max(z.max_deviation, std::abs(r - 1));
            z.K = std::max(z.K, std::max(r, 1 / r));
        }
    }
    return z;
}

}  // namespace conelab
