#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "conelab/common.hpp"
#include "conelab/fit.hpp"
#include "conelab/pchip.hpp"
#include "conelab/quadrature.hpp"

namespace conelab {

// Value and t-derivatives of phi_1 at one point.
struct PhiJet {
    double phi = 0, d1 = 0, d2 = 0, d3 = 0, d4 = 0;
    double dlog2 = 0;   // d/dphi log phi''
    double ddlog2 = 0;  // d^2/dphi^2 log phi''
};

struct ConstantsReport {
    int n = 0;
    double I_n = 0, J_n = 0;
    double c_n = 0, c_prime_n = 0, a_n = 0;
    double I_error = 0, J_error = 0;
};

// phi_1 for one sign and dimension. Immutable after construction.
//
//   Negative: F(x) = -int_x^inf (1 + e^s)^{-a} ds,  phi_1(t) = F^{-1}(t)
//   Positive: F(x) =  int_0^x (1 - e^{-s})^{-a} ds, phi_1(t) = F^{-1}(-t)
//
// with a = 1/(n+1). Both tails are convergent binomial series; the negative
// case uses Gauss-Kronrod on the band |x| < 2 between them.
class PotentialProfile {
public:
    static constexpr int cache_nodes = 512;
    static constexpr double cut = 2.0;

    PotentialProfile(Sign sign, int n, double tol = 1e-13) : sign_(sign), n_(n), tol_(tol) {
        detail::require(n >= 1, "n must be >= 1, got ", n);
        detail::require(tol > 0 && tol < 1e-3, "quadrature tolerance must lie in (0, 1e-3)");
        a_ = 1.0 / (n + 1);
        // c_k = binom(-a, k); |c_k| <= 1. d_k = (-1)^k c_k > 0.
        coef_.resize(max_terms);
        coef_[0] = 1;
        for (int k = 1; k < max_terms; ++k) coef_[k] = coef_[k - 1] * (-a_ - k + 1) / k;
        if (sign_ == Sign::Negative) init_negative();
        else init_positive();
        build_cache();
    }

    Sign sign() const { return sign_; }
    int n() const { return n_; }
    double a() const { return a_; }
    double tolerance() const { return tol_; }
    double I_n() const { return I_; }
    double J_n() const { return J_; }
    double constant_error() const { return const_err_; }
    const std::vector<double>& cache_x() const { return cache_x_; }
    const std::vector<double>& cache_F() const { return cache_F_; }

    double F(double x) const {
        detail::require_finite(x, "x");
        return sign_ == Sign::Negative ? F_neg(x) : F_pos(x);
    }

    double F_prime(double x) const {
        if (sign_ == Sign::Negative) return std::exp(-a_ * softplus(x));
        detail::require(x > 0, "F_+' needs x > 0");
        return std::pow(-std::expm1(-x), -a_);
    }

    double phi1(double t) const {
        detail::require_finite(t, "t");
        detail::require(t < 0, "phi_1 is defined for t < 0, got t = ", t);
        return sign_ == Sign::Negative ? invert_negative(t) : invert_positive(-t);
    }

    // Derivatives from the first integral and its t-derivatives; no
    // numerical differentiation.
    PhiJet jet_at_phi(double phi) const {
        PhiJet j;
        j.phi = phi;
        const int n = n_;
        const double a = a_;
        double p, d2, L1, L1p, s;
        if (sign_ == Sign::Positive) {
            detail::require(phi > 0, "positive-case phi must be > 0");
            const double x = std::exp(-phi);
            const double om = -std::expm1(-phi);  // 1 - x
            p = std::pow(om, a);
            d2 = x / ((n + 1) * std::pow(p, n - 1));
            L1 = a * x / om;
            L1p = -a * x / (om * om);
            s = -1;  // -sigma
            j.d1 = -p;
        } else {
            const double lp = a * softplus(phi);
            p = std::exp(lp);
            d2 = std::exp(phi - std::log(n + 1.0) - (n - 1) * lp);
            const double sg = 1 / (1 + std::exp(-phi));  // x/(1+x)
            L1 = a * sg;
            L1p = a * sg * (1 - sg);
            s = 1;
            j.d1 = p;
        }
        j.d2 = d2;
        j.dlog2 = s - (n - 1) * L1;
        j.ddlog2 = -(n - 1) * L1p;
        const double g1 = d2 * (s - (n - 1) * L1);
        const double g2 = d2 * ((s - (n - 1) * L1) * (s - (n - 1) * L1) - (n - 1) * L1p);
        j.d3 = g1 * j.d1;
        j.d4 = g2 * j.d1 * j.d1 + g1 * d2;
        return j;
    }

    PhiJet jet(double t) const { return jet_at_phi(phi1(t)); }

    // |(-sigma phi')^{n+1} - (1 - sigma e^{-sigma phi})| relative to max(1, rhs)
    double first_integral_residual(double phi, double d1) const {
        const double sg = sigma(sign_);
        const double lhs = std::pow(-sg * d1, n_ + 1);
        const double rhs = sign_ == Sign::Positive ? -std::expm1(-phi) : 1 + std::exp(phi);
        return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
    }

private:
    static constexpr int max_terms = 400;

    // -int_x^inf (1+e^s)^{-a} ds for x >= cut, series in w = e^{-x}
    double tail_plus(double x, double* bound = nullptr) const {
        const double w = std::exp(-x);
        double pw = std::pow(w, a_), sum = 0;
        int k = 0;
        for (; k < max_terms; ++k) {
            const double term = coef_[k] * pw / (k + a_);
            sum += term;
            pw *= w;
            if (pw < 1e-18 * std::abs(sum)) break;
        }
        if (bound) *bound = pw / (k + 1 + a_) / (1 - w);
        return -sum;
    }

    // sum_{k>=1} c_k e^{kx}/k for x <= -cut
    double tail_minus(double x, double* bound = nullptr) const {
        const double w = std::exp(x);
        double pw = w, sum = 0;
        int k = 1;
        for (; k < max_terms; ++k) {
            sum += coef_[k] * pw / k;
            pw *= w;
            if (pw < 1e-18 * std::max(std::abs(sum), 1e-300)) break;
        }
        if (bound) *bound = pw / (k + 1) / (1 - w);
        return sum;
    }

    double band_integral(double x0, double x1, double* err = nullptr) const {
        auto r = integrate([this](double s) { return std::exp(-a_ * softplus(s)); }, x0, x1,
                           0.1 * tol_, 0.1 * tol_);
        if (err) *err = r.error;
        return r.value;
    }

    double F_neg(double x) const {
        if (x >= cut) return tail_plus(x);
        if (x <= -cut) return x - I_ + tail_minus(x);
        return F_cut_ - band_integral(x, cut);
    }

    // small x: W = 1 - e^{-x}, F = sum_k W^{k+1-a}/(k+1-a)
    double head_pos(double x, double* bound = nullptr) const {
        const double W = -std::expm1(-x);
        double pw = std::pow(W, 1 - a_), sum = 0;
        int k = 0;
        for (; k < 4 * max_terms; ++k) {
            sum += pw / (k + 1 - a_);
            pw *= W;
            if (pw < 1e-18 * sum) break;
        }
        if (bound) *bound = pw / (k + 2 - a_) / (1 - W);
        return sum;
    }

    // sum_{k>=1} d_k e^{-kx}/k, d_k = |binom(-a, k)|
    double tail_pos(double x, double* bound = nullptr) const {
        const double w = std::exp(-x);
        double pw = w, sum = 0;
        int k = 1;
        for (; k < max_terms; ++k) {
            sum += std::abs(coef_[k]) * pw / k;
            pw *= w;
            if (pw < 1e-18 * std::max(sum, 1e-300)) break;
        }
        if (bound) *bound = pw / (k + 1) / (1 - w);
        return sum;
    }

    double F_pos(double x) const {
        detail::require(x >= 0, "F_+ is defined for x >= 0, got ", x);
        if (x == 0) return 0;
        if (x <= cut) return head_pos(x);
        return x + J_ - tail_pos(x);
    }

    void init_negative() {
        double b1 = 0, e = 0;
        F_cut_ = tail_plus(cut, &b1);
        const double band = band_integral(-cut, cut, &e);
        const double F_mcut = F_cut_ - band;
        double b3 = 0;
        // F(-cut) = -cut - I + tail_minus(-cut)
        I_ = -F_mcut - cut + tail_minus(-cut, &b3);
        const_err_ = b1 + e + b3;
        if (!(const_err_ < 1e-8))
            throw ConvergenceError(detail::cat("I_n error bound ", const_err_, " too large"));
    }

    void init_positive() {
        double b1 = 0, b2 = 0;
        const double Fc = head_pos(cut, &b1);
        J_ = Fc - cut + tail_pos(cut, &b2);
        const_err_ = b1 + b2;
        if (!(const_err_ < 1e-8))
            throw ConvergenceError(detail::cat("J_n error bound ", const_err_, " too large"));
    }

    void build_cache() {
        cache_x_.resize(cache_nodes);
        cache_F_.resize(cache_nodes);
        std::vector<double> key(cache_nodes), var(cache_nodes);
        if (sign_ == Sign::Negative) {
            // x uniform on [lo, hi]; key log(-F) decreasing -> store reversed
            const double lo = -40, hi = 40 / a_;
            for (int i = 0; i < cache_nodes; ++i) {
                const double x = lo + (hi - lo) * i / (cache_nodes - 1);
                cache_x_[i] = x;
                cache_F_[i] = F_neg(x);
            }
            // key -log(-F) increases with x
            for (int i = 0; i < cache_nodes; ++i) {
                key[i] = -std::log(-cache_F_[i]);
                var[i] = cache_x_[i];
            }
            inverse_ = Pchip(std::move(key), std::move(var));
        } else {
            const double lo = std::log(1e-40), hi = std::log(700.0);
            for (int i = 0; i < cache_nodes; ++i) {
                const double y = lo + (hi - lo) * i / (cache_nodes - 1);
                cache_x_[i] = std::exp(y);
                cache_F_[i] = F_pos(cache_x_[i]);
                key[i] = std::log(cache_F_[i]);
                var[i] = y;
            }
            inverse_ = Pchip(std::move(key), std::move(var));
        }
    }

    // Safeguarded Newton for an increasing g on [lo, hi] with g(lo) < 0 < g(hi).
    template <class G>
    static double solve_increasing(G&& g, double lo, double hi, double guess) {
        double y = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            auto [val, der] = g(y);
            if (val == 0) return y;
            if (val < 0) lo = y;
            else hi = y;
            double next = y - val / der;
            if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
            const double step = next - y;
            y = next;
            if (std::abs(step) <= 4 * eps * std::max(1.0, std::abs(y))) return y;
            if (hi - lo <= 4 * eps * std::max(1.0, std::abs(y))) return y;
        }
        throw ConvergenceError("phi_1 inversion: Newton iteration did not converge");
    }

    double invert_negative(double t) const {
        // g(x) = log(-t) - log(-F(x)) is increasing in x
        auto g = [&](double x) {
            const double f = F_neg(x);
            return std::pair{std::log(-t) - std::log(-f), F_prime(x) / -f};
        };
        const double key = -std::log(-t);
        const auto& kx = inverse_.x();
        double guess, lo, hi;
        if (key < kx.front()) {
            guess = t + I_;
            lo = guess - 1;
            hi = cache_x_.front() + 1;
            if (t < -1e15) return guess;  // e^x below rounding of x
        } else if (key > kx.back()) {
            guess = -std::log(-a_ * t) / a_;
            lo = cache_x_.back() - 1;
            hi = guess + 1;
        } else {
            const std::size_t i = inverse_.segment(key);
            guess = inverse_(key);
            lo = inverse_.y()[i] - 1e-9;
            hi = inverse_.y()[i + 1] + 1e-9;
        }
        while (g(lo).first > 0) lo -= 2 * (hi - lo);
        while (g(hi).first < 0) hi += 2 * (hi - lo);
        const double x = solve_increasing(g, lo, hi, guess);
        check_residual(F_neg(x), t);
        return x;
    }

    double invert_positive(double T) const {
        const double key = std::log(T);
        const auto& kx = inverse_.x();
        if (key > kx.back() && T > 800) return T - J_;  // tail below rounding
        auto g = [&](double y) {
            const double x = std::exp(y);
            const double f = F_pos(x);
            return std::pair{std::log(f) - key, x * F_prime(x) / f};
        };
        double guess, lo, hi;
        if (key < kx.front()) {
            guess = std::log((1 - a_) * T) / (1 - a_);
            lo = guess - 1;
            hi = std::log(cache_x_.front()) + 1;
        } else if (key > kx.back()) {
            guess = std::log(T - J_);
            lo = std::log(cache_x_.back()) - 1;
            hi = guess + 1;
        } else {
            const std::size_t i = inverse_.segment(key);
            guess = inverse_(key);
            lo = inverse_.y()[i] - 1e-9;
            hi = inverse_.y()[i + 1] + 1e-9;
        }
        while (g(lo).first > 0) lo -= 2 * (hi - lo);
        while (g(hi).first < 0) hi += 2 * (hi - lo);
        const double x = std::exp(solve_increasing(g, lo, hi, guess));
        check_residual(F_pos(x), T);
        return x;
    }

    void check_residual(double f, double target) const {
        if (!(std::abs(f - target) <= std::max(tol_, 1e-12) * std::max(1.0, std::abs(target))))
            throw ConvergenceError(detail::cat("phi_1 inversion residual ", std::abs(f - target),
                                               " exceeds tolerance at target ", target));
    }

    Sign sign_;
    int n_;
    double tol_;
    double a_ = 0;
    std::vector<double> coef_;
    double I_ = 0, J_ = 0, F_cut_ = 0, const_err_ = 0;
    std::vector<double> cache_x_, cache_F_;
    Pchip inverse_;
};

// Shared immutable profile per (sign, n) at the default tolerance.
inline const PotentialProfile& profile(Sign sign, int n) {
    static std::mutex m;
    static std::map<std::pair<int, int>, std::unique_ptr<PotentialProfile>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[{static_cast<int>(sign), n}];
    if (!slot) slot = std::make_unique<PotentialProfile>(sign, n);
    return *slot;
}

inline double eval_F(const PotentialProfile& p, double x) { return p.F(x); }
inline double eval_phi1(const PotentialProfile& p, double t) { return p.phi1(t); }

struct PhiDerivatives {
    double phi1, phi1_prime, phi1_second;
};

inline PhiDerivatives eval_phi1_derivatives(const PotentialProfile& p, double t) {
    const auto j = p.jet(t);
    return {j.phi, j.d1, j.d2};
}

inline double c_n(int n) { return std::pow(n / (n + 1.0), (n + 1.0) / n); }
inline double c_prime_n(int n) { return std::pow(n / (n + 1.0), 1.0 / n); }

inline ConstantsReport constants(int n) {
    detail::require(n >= 1, "n must be >= 1, got ", n);
    const auto& neg = profile(Sign::Negative, n);
    const auto& pos = profile(Sign::Positive, n);
    ConstantsReport r;
    r.n = n;
    r.I_n = neg.I_n();
    r.J_n = pos.J_n();
    r.I_error = neg.constant_error();
    r.J_error = pos.constant_error();
    r.c_n = c_n(n);
    r.c_prime_n = c_prime_n(n);
    r.a_n = std::exp(r.I_n) / (n + 1);
    return r;
}

struct ScaledPotential {
    const PotentialProfile* base = nullptr;
    double beta = 1;

    ScaledPotential(const PotentialProfile& p, double b) : base(&p), beta(b) {
        detail::require(b > 0 && b <= 1, "beta must lie in (0, 1], got ", b);
    }

    double operator()(double t) const {
        detail::require(t < 0, "scaled potential needs t < 0");
        const double v = base->phi1(beta * t);
        return base->sign() == Sign::Negative ? v + (base->n() + 1) * std::log(beta) : v;
    }

    // t-derivatives of phi_beta
    PhiJet jet(double t) const {
        auto j = base->jet(beta * t);
        if (base->sign() == Sign::Negative) j.phi += (base->n() + 1) * std::log(beta);
        const double b = beta;
        j.d1 *= b;
        j.d2 *= b * b;
        j.d3 *= b * b * b;
        j.d4 *= b * b * b * b;
        return j;
    }
};

inline double eval_scaled(const ScaledPotential& sp, double t) { return sp(t); }

enum class Regime { MinusInfinity, ZeroMinus };

struct ExpansionResult {
    ScalingFit fit;
    std::vector<double> t, remainder;
};

// Remainder after subtracting the leading terms of phi_1 in a regime.
//   MinusInfinity: phi - (t + I + e^I e^t/(n+1))   (neg)
//                  phi - (-t - J + e^J e^t/(n+1))  (pos); fit log|r| vs t
//   ZeroMinus:     neg: phi + (n+1) log(-t/(n+1)); fit log|r| vs log(-t)
//                  pos: phi/(c_n (-t)^{1+1/n}) - 1; fit log|r| vs log(-t)
inline ExpansionResult expansion_residual(const PotentialProfile& p, Regime regime,
                                          const std::vector<double>& tgrid) {
    detail::require(tgrid.size() >= 8, "grid too short for regression (< 8 points)");
    const int n = p.n();
    ExpansionResult out;
    for (double t : tgrid) {
        detail::require(t < 0, "expansion grid must be negative");
        const double phi = p.phi1(t);
        double r;
        if (regime == Regime::MinusInfinity) {
            if (p.sign() == Sign::Negative) {
                r = phi - (t + p.I_n() + std::exp(p.I_n() + t) / (n + 1));
            } else {
                r = phi - (-t - p.J_n() + std::exp(p.J_n() + t) / (n + 1));
            }
        } else {
            if (p.sign() == Sign::Negative) {
                r = phi + (n + 1) * std::log(-t / (n + 1));
            } else {
                r = phi / (c_n(n) * std::pow(-t, 1 + 1.0 / n)) - 1;
            }
        }
        out.t.push_back(t);
        out.remainder.push_back(r);
    }
    if (regime == Regime::MinusInfinity) {
        out.fit = semilog_fit(out.t, out.remainder);
    } else {
        out.fit = loglog_fit(out.t, out.remainder, 8);
    }
    return out;
}

// Negative case near t = 0^-: coefficient k in
// phi_1 = -(n+1) log tau + k tau^{n+1} + ..., tau = -t/(n+1),
// estimated from the remainder and one Richardson step.
inline double negative_zero_coefficient(const PotentialProfile& p, double tau = 1e-2) {
    detail::require(p.sign() == Sign::Negative, "negative case only");
    const int n = p.n();
    auto k_at = [&](double s) {
        const double phi = p.phi1(-(n + 1) * s);
        return (phi + (n + 1) * std::log(s)) / std::pow(s, n + 1);
    };
    // k(s) = k + O(s^{n+1})
    const double k1 = k_at(tau), k2 = k_at(tau / 2);
    const double f = std::pow(2.0, n + 1);
    return (f * k2 - k1) / (f - 1);
}

inline std::vector<double> default_expansion_grid(Sign s, Regime r, int n, int points = 16) {
    if (r == Regime::MinusInfinity) return linspace(-12.0, -5.0, points);
    std::vector<double> g;
    if (s == Sign::Positive) {
        g = logspace(1e-4, 1e-2, points);
    } else {
        // remainder ~ tau^{n+1}; keep it well above rounding of the log term
        g = logspace(5e-2 * (n + 1), 4e-1 * (n + 1), points);
    }
    for (auto& x : g) x = -x;
    return g;
}

}  // namespace conelab
