#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "conelab/calabi_potential.hpp"
#include "conelab/fit.hpp"
#include "conelab/model_metric.hpp"
#include "conelab/quadrature.hpp"

namespace conelab {

struct CollapseProfile {
    const PotentialProfile* profile = nullptr;
    double beta = 0.1;
    double volD = 1;

    CollapseProfile(const PotentialProfile& p, double b, double vol = 1)
        : profile(&p), beta(b), volD(vol) {
        check_beta(b);
        detail::require(vol > 0, "volD must be > 0");
    }
    int n() const { return profile->n(); }
};

namespace detail {

inline constexpr double split_u = -1.0;

// int over (u1, u2) of f(u) du with u1 >= -inf, u2 <= split_u, in r = e^{u/2}
template <class F>
QuadResult integrate_left(F&& f, double u1, double u2, double tol) {
    const double r1 = std::isinf(u1) ? 0.0 : std::exp(u1 / 2), r2 = std::exp(u2 / 2);
    auto g = [&](double r) { return f(2 * std::log(r)) * 2 / r; };
    return integrate(g, r1, r2, tol, tol);
}

}  // namespace detail

// Length of the du-direction, int sqrt(phi''/2) du. u1 may be -infinity.
//   u < -1: r = e^{u/2} (integrand tends to a constant at r = 0)
//   u >= -1, positive case: u = -w^m, m = 2n/(n+1), which cancels the
//     (-u)^{(1/n-1)/2} singularity exactly
//   u >= -1, negative case: tau = log(-u)
inline double radial_length(const PotentialProfile& p, double u1, double u2, double tol = 1e-13) {
    detail::require(u1 < u2 && u2 <= 0, "radial_length needs u1 < u2 <= 0");
    detail::require(p.sign() == Sign::Positive || u2 < 0,
                    "negative-case length diverges at u = 0");
    auto f = [&](double u) { return std::sqrt(p.jet(u).d2 / 2); };
    double total = 0;
    const double s = detail::split_u;
    if (u1 < s) total += detail::integrate_left(f, u1, std::min(u2, s), tol).value;
    if (u2 > s) {
        const double a = std::max(u1, s);
        if (p.sign() == Sign::Positive) {
            const double m = 2.0 * p.n() / (p.n() + 1);
            auto g = [&](double w) {
                const double u = -std::pow(w, m);
                return f(u) * m * std::pow(w, m - 1);
            };
            total += integrate(g, std::pow(-u2, 1 / m), std::pow(-a, 1 / m), tol, tol).value;
        } else {
            auto g = [&](double tau) {
                const double u = -std::exp(tau);
                return f(u) * -u;
            };
            total += integrate(g, std::log(-u2), std::log(-a), tol, tol).value;
        }
    }
    return total;
}

inline double radial_length(const CollapseProfile& cp, double u1, double u2, double tol = 1e-13) {
    return radial_length(*cp.profile, u1, u2, tol);
}

inline double interval_length(int n) { return std::sqrt(2.0 / (n + 1)) * pi / 2; }

// partial lengths from u = -1 up to each cutoff (negative case: unbounded)
inline std::vector<double> partial_lengths(const PotentialProfile& p, const std::vector<double>& cutoffs) {
    std::vector<double> out;
    for (double c : cutoffs) out.push_back(radial_length(p, -1.0, c));
    return out;
}

struct VolumeReport {
    double closed_form = 0, quadrature = 0;
};

// Vol = beta^n 2 pi volD int phi'' x^{n-1} du = beta^n 2 pi volD / n.
// Quadrature: r = e^{u/2} on u < -1, u = -y^n on [-1, 0) (integrand smooth in y).
inline VolumeReport model_volume(const CollapseProfile& cp, double tol = 1e-13) {
    const auto& p = *cp.profile;
    require_positive(p, "model_volume");
    const int n = p.n();
    auto f = [&](double u) {
        const auto j = p.jet(u);
        return j.d2 * std::pow(-j.d1, n - 1);
    };
    double I = detail::integrate_left(f, -std::numeric_limits<double>::infinity(),
                                      detail::split_u, tol)
                   .value;
    auto g = [&](double y) { return f(-std::pow(y, n)) * n * std::pow(y, n - 1); };
    I += integrate(g, 0.0, 1.0, tol, tol).value;
    const double scale = std::pow(cp.beta, n) * 2 * pi * cp.volD;
    return {scale / n, scale * I};
}

struct CdfRow {
    double s, cdf, exact, error;
};

// Normalized volume of {s' <= s}, n int_{-inf}^{u(s)} phi'' x^{n-1} du,
// against 1 - cos^{2n/(n+1)} s.
inline std::vector<CdfRow> limit_measure_pushforward(const CollapseProfile& cp,
                                                     const std::vector<double>& sgrid,
                                                     double tol = 1e-12) {
    const auto& p = *cp.profile;
    require_positive(p, "limit_measure_pushforward");
    const int n = p.n();
    auto f = [&](double u) {
        const auto j = p.jet(u);
        return j.d2 * std::pow(-j.d1, n - 1);
    };
    std::vector<CdfRow> rows;
    for (double s : sgrid) {
        detail::require(s >= 0 && s <= pi / 2, "s must lie in [0, pi/2]");
        double mass = 0;
        if (s > 0) {
            const double u = s >= pi / 2 ? 0.0 : from_s(p, s);
            const double ninf = -std::numeric_limits<double>::infinity();
            mass = detail::integrate_left(f, ninf, std::min(u, detail::split_u), tol).value;
            if (u > detail::split_u) {
                auto g = [&](double y) { return f(-std::pow(y, n)) * n * std::pow(y, n - 1); };
                mass += integrate(g, std::pow(-u, 1.0 / n), 1.0, tol, tol).value;
            }
        }
        const double cdf = n * mass;
        const double exact = 1 - std::pow(std::cos(s), 2.0 * n / (n + 1));
        rows.push_back({s, cdf, exact, std::abs(cdf - exact)});
    }
    return rows;
}

// nu = c sin s cos^{(n-1)/(n+1)} s ds with unit mass
inline double limit_density_constant(int n) { return 2.0 * n / (n + 1); }

inline ScalingFit volume_exponent_fit(int n, const std::vector<double>& betas, double volD = 1) {
    std::vector<double> v;
    for (double b : betas) v.push_back(model_volume(CollapseProfile(profile(Sign::Positive, n), b, volD)).quadrature);
    return loglog_fit(betas, v);
}

enum class BasePoint { OnDivisor, OffDivisor };

// epsilon_beta relative to 1 > beta > beta^{1+1/n}
enum class RateClass {
    One,                    // no rescaling
    BetweenBetaAndOne,      // beta << eps << 1
    EqualsBeta,             // eps = beta
    BetweenBetaPowAndBeta,  // beta^{1+1/n} << eps << beta
    EqualsBetaPow,          // eps = beta^{1+1/n}
    BelowBetaPow            // eps << beta^{1+1/n}
};

enum class LimitSpace { Interval, HalfLine, HalfLineTimesD, HalfLineTimesCn1, TianYau, TrivialBubble };

struct GHRegime {
    BasePoint base;
    RateClass rate;
    LimitSpace limit;
};

inline const char* to_string(BasePoint b) { return b == BasePoint::OnDivisor ? "on_divisor" : "off_divisor"; }

inline const char* to_string(RateClass r) {
    switch (r) {
        case RateClass::One: return "one";
        case RateClass::BetweenBetaAndOne: return "between_beta_and_one";
        case RateClass::EqualsBeta: return "equals_beta";
        case RateClass::BetweenBetaPowAndBeta: return "between_beta_pow_and_beta";
        case RateClass::EqualsBetaPow: return "equals_beta_pow";
        case RateClass::BelowBetaPow: return "below_beta_pow";
    }
    throw DomainError("unknown rate class");
}

inline const char* to_string(LimitSpace l) {
    switch (l) {
        case LimitSpace::Interval: return "interval";
        case LimitSpace::HalfLine: return "half_line";
        case LimitSpace::HalfLineTimesD: return "half_line_times_D";
        case LimitSpace::HalfLineTimesCn1: return "half_line_times_C^(n-1)";
        case LimitSpace::TianYau: return "tian_yau";
        case LimitSpace::TrivialBubble: return "trivial_bubble";
    }
    throw DomainError("unknown limit space");
}

inline GHRegime classify_regime(BasePoint base, RateClass rate) {
    LimitSpace l;
    const int r = static_cast<int>(rate);
    if (r < 0 || r > static_cast<int>(RateClass::BelowBetaPow))
        throw DomainError("unknown rate class");
    if (rate == RateClass::One) {
        l = LimitSpace::Interval;
    } else if (base == BasePoint::OnDivisor) {
        if (rate == RateClass::BetweenBetaAndOne) l = LimitSpace::HalfLine;
        else if (rate == RateClass::EqualsBeta) l = LimitSpace::HalfLineTimesD;
        else l = LimitSpace::HalfLineTimesCn1;
    } else {
        if (rate == RateClass::EqualsBetaPow) l = LimitSpace::TianYau;
        else if (rate == RateClass::BelowBetaPow) l = LimitSpace::TrivialBubble;
        else l = LimitSpace::HalfLine;
    }
    return {base, rate, l};
}

// Rate class of eps = beta^e.
inline RateClass rate_of_exponent(double e, int n) {
    const double pw = 1 + 1.0 / n;
    const double tol = 1e-12;
    detail::require(e >= 0, "eps = beta^e needs e >= 0");
    if (e < tol) return RateClass::One;
    if (e < 1 - tol) return RateClass::BetweenBetaAndOne;
    if (e <= 1 + tol) return RateClass::EqualsBeta;
    if (e < pw - tol) return RateClass::BetweenBetaPowAndBeta;
    if (e <= pw + tol) return RateClass::EqualsBetaPow;
    return RateClass::BelowBetaPow;
}

struct RegimeWitness {
    std::vector<double> betas;
    std::vector<double> fiber;    // eps^{-1} x circle coefficient on the sample scale
    std::vector<double> divisor;  // eps^{-1} x g_D coefficient on the sample scale
    ScalingFit fiber_fit, divisor_fit;
};

// Evaluates the rescaled metric coefficients on the scales the
// classification rests on, for eps = beta^e.
//   OffDivisor: circle at u = -beta (its smallest size), g_D at the edge
//               of the unit ball, sigma = pi/2 - s = sqrt(eps).
//   OnDivisor:  circle at the ball edge s = sqrt(eps), g_D deep on the
//               divisor side (u = -40).
inline RegimeWitness regime_witness(int n, BasePoint base, double e,
                                    const std::vector<double>& betas) {
    detail::require(betas.size() >= 3, "insufficient samples for regime witness");
    const auto& p = profile(Sign::Positive, n);
    RegimeWitness w;
    for (double b : betas) {
        check_beta(b);
        const double eps_b = std::pow(b, e);
        double fib, div;
        if (base == BasePoint::OffDivisor) {
            fib = metric_at(p, b, -b).coeff_eta2 / eps_b;
            const double sg = std::min(std::sqrt(eps_b), pi / 2 * (1 - 1e-9));
            div = metric_at(p, b, from_s(p, pi / 2 - sg)).coeff_gD / eps_b;
        } else {
            const double s = std::min(std::sqrt(eps_b), pi / 2 * (1 - 1e-9));
            fib = metric_at(p, b, from_s(p, s)).coeff_eta2 / eps_b;
            div = metric_at(p, b, -40.0).coeff_gD / eps_b;
        }
        w.betas.push_back(b);
        w.fiber.push_back(fib);
        w.divisor.push_back(div);
    }
    w.fiber_fit = loglog_fit(w.betas, w.fiber);
    w.divisor_fit = loglog_fit(w.betas, w.divisor);
    return w;
}

}  // namespace conelab
