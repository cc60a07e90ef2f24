#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "conelab/common.hpp"
#include "conelab/linalg.hpp"
#include "conelab/quadrature.hpp"

namespace conelab {

// Flat cone dr^2 + beta^2 r^2 dtheta^2 on {r < R}.
struct ConeDisk {
    double beta = 0.25;
    double R = 0.5;
    double alpha = 0.5;

    ConeDisk() = default;
    ConeDisk(double b, double radius = 0.5, double a = 0.5) : beta(b), R(radius), alpha(a) { validate(); }

    void validate() const {
        detail::require(beta > 0 && beta < 0.5, "cone angle needs beta in (0, 1/2), got ", beta);
        detail::require(R > 0, "disk radius must be > 0");
        detail::require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1), got ", alpha);
    }
};

using ConeFunction = std::function<double(double r, double theta)>;
using BoundaryFunction = std::function<double(double theta)>;

inline double wrap_angle(double d) {
    d = std::remainder(d, 2 * pi);
    return d <= -pi ? d + 2 * pi : d;
}

// Angle between the two rays in the flat development; |psi| <= pi beta < pi/2.
inline double development_angle(double beta, double t1, double t2) { return beta * wrap_angle(t2 - t1); }

inline double cone_distance(double beta, double r1, double t1, double r2, double t2) {
    const double s = std::sin(development_angle(beta, t1, t2) / 2);
    return std::sqrt((r1 - r2) * (r1 - r2) + 4 * r1 * r2 * s * s);
}

// Value, gradient and Hessian in the orthonormal frame (d_r, (beta r)^{-1} d_theta),
// plus the flat-factor second derivative for separable data.
struct ConeJet {
    double value = 0;
    std::array<double, 2> grad{};
    std::array<double, 3> hess{};  // h11, h12, h22
    double flat2 = 0;       // Laplacian along the flat factor
    double tangential = 0;  // second derivative along the flat factor
    double laplacian() const { return hess[0] + hess[2] + flat2; }
    double grad_norm() const { return std::hypot(grad[0], grad[1]); }
    double hess_norm() const {
        return std::sqrt(hess[0] * hess[0] + 2 * hess[1] * hess[1] + hess[2] * hess[2]);
    }
};

// Radial profiles A(r) cos k theta + B(r) sin k theta, with r-derivatives.
struct ModeValues {
    int k = 0;
    double A = 0, A1 = 0, A2 = 0, B = 0, B1 = 0, B2 = 0;
};

inline ConeJet jet_from_modes(double beta, double r, double theta, const std::vector<ModeValues>& modes) {
    double u = 0, ur = 0, ut = 0, urr = 0, urt = 0, utt = 0;
    for (const auto& m : modes) {
        const double c = std::cos(m.k * theta), s = std::sin(m.k * theta), k = m.k;
        u += m.A * c + m.B * s;
        ur += m.A1 * c + m.B1 * s;
        urr += m.A2 * c + m.B2 * s;
        ut += k * (-m.A * s + m.B * c);
        urt += k * (-m.A1 * s + m.B1 * c);
        utt -= k * k * (m.A * c + m.B * s);
    }
    ConeJet j;
    j.value = u;
    if (r <= 0) {
        // only the radial mode survives at the apex (beta < 1/2)
        j.hess = {urr, 0, urr};
        return j;
    }
    const double br = beta * r;
    j.grad = {ur, ut / br};
    j.hess = {urr, (urt - ut / r) / br, (utt + beta * beta * r * ur) / (br * br)};
    return j;
}

// ---- power-law data with closed-form solutions -----------------------------

// f = sum r^gamma (a cos k theta + b sin k theta)
struct TrigRadialTerm {
    int k = 0;
    double gamma = 0;
    double a = 0, b = 0;
};

// boundary data sum (a cos k theta + b sin k theta)
struct TrigTerm {
    int k = 0;
    double a = 0, b = 0;
};

struct TrigRadialData {
    std::vector<TrigRadialTerm> terms;

    void validate() const {
        for (const auto& t : terms) {
            detail::require(t.k >= 0, "mode index must be >= 0");
            detail::require(t.k == 0 ? t.gamma >= 0 : t.gamma > 0,
                            "modes k >= 1 must vanish at r = 0 (need gamma > 0)");
        }
    }
    double operator()(double r, double theta) const {
        double f = 0;
        for (const auto& t : terms)
            f += (r > 0 ? std::pow(r, t.gamma) : (t.gamma == 0 ? 1.0 : 0.0)) *
                 (t.a * std::cos(t.k * theta) + t.b * std::sin(t.k * theta));
        return f;
    }
    TrigRadialData scaled(double s) const {
        auto c = *this;
        for (auto& t : c.terms) {
            t.a *= s;
            t.b *= s;
        }
        return c;
    }
    TrigRadialData mean_zero() const {
        TrigRadialData c;
        for (const auto& t : terms)
            if (t.k > 0) c.terms.push_back(t);
        return c;
    }
};

namespace detail {

// P solves P'' + P'/r - nu^2 P/r^2 = r^gamma, P(R) = 0, P = O(r^nu) at 0.
inline std::array<double, 3> power_profile(double gamma, double nu, double R, double r) {
    const double g2 = gamma + 2, a = g2 - nu, Rg = std::pow(R, g2);
    if (r <= 0) {
        if (nu > 0) return {0, 0, 0};
        return {-Rg / (g2 * g2), 0, gamma == 0 ? 0.5 : 0};
    }
    const double L = std::log(r / R);
    const double eg = std::exp(g2 * L), en = std::exp(nu * L);
    if (std::abs(a) >= 0.25) {
        const double D = a * (g2 + nu);
        return {Rg * (eg - en) / D, Rg * (g2 * eg - nu * en) / (r * D),
                Rg * (g2 * (g2 - 1) * eg - nu * (nu - 1) * en) / (r * r * D)};
    }
    // near resonance: E = (e^{aL} - 1)/a
    const double E = std::abs(a * L) < 1e-300 ? L : std::expm1(a * L) / a;
    const double s = en * Rg / (g2 + nu);
    return {s * E, s * (g2 * E + 1) / r, s * (nu * (nu - 1) * E + (gamma + 1 + nu) * std::exp(a * L)) / (r * r)};
}

inline std::array<double, 3> harmonic_profile(double nu, double R, double r) {
    if (r <= 0) return {nu == 0 ? 1.0 : 0.0, 0, 0};
    const double e = std::pow(r / R, nu);
    return {e, nu * e / r, nu * (nu - 1) * e / (r * r)};
}

}  // namespace detail

// Closed-form solution of Delta u = f on the cone disk with u = g on r = R.
class ExactModalSolution {
public:
    ExactModalSolution(const ConeDisk& d, TrigRadialData f, std::vector<TrigTerm> g = {})
        : disk_(d), f_(std::move(f)), g_(std::move(g)) {
        disk_.validate();
        f_.validate();
    }

    std::vector<ModeValues> modes(double r) const {
        std::vector<ModeValues> out;
        for (const auto& t : f_.terms) {
            const auto P = detail::power_profile(t.gamma, t.k / disk_.beta, disk_.R, r);
            out.push_back({t.k, t.a * P[0], t.a * P[1], t.a * P[2], t.b * P[0], t.b * P[1], t.b * P[2]});
        }
        for (const auto& t : g_) {
            const auto H = detail::harmonic_profile(t.k / disk_.beta, disk_.R, r);
            out.push_back({t.k, t.a * H[0], t.a * H[1], t.a * H[2], t.b * H[0], t.b * H[1], t.b * H[2]});
        }
        return out;
    }
    ConeJet jet(double r, double theta) const { return jet_from_modes(disk_.beta, r, theta, modes(r)); }
    double value(double r, double theta) const { return jet(r, theta).value; }
    const ConeDisk& disk() const { return disk_; }
    const TrigRadialData& data() const { return f_; }

private:
    ConeDisk disk_;
    TrigRadialData f_;
    std::vector<TrigTerm> g_;
};

// ---- Fourier-mode finite-difference solver ---------------------------------

struct ModeSolveOptions {
    int angular_nodes = 64;
    int radial_cells = 2000;    // coarse cells in tau = log r; Richardson uses 2x
    double log_span = 25;       // tau in [log R - span, log R]
    double xi = 0;              // flat frequency: solves Delta U - xi^2 U = f
    double drift = 0;           // adds drift * d_r u to the operator
    double tail_tol = 1e-10;    // relative size of modes k > M/4
    bool richardson = true;
};

namespace detail {

inline double sinh_ratio(double x, double H) {  // sinh(x)/sinh(H), 0 <= x <= H
    if (H < 1e-8) return H > 0 ? x / H : 0;
    return std::exp(x - H) * -std::expm1(-2 * x) / -std::expm1(-2 * H);
}
inline double cosh_sinh_ratio(double x, double H) {  // cosh(x)/sinh(H)
    return std::exp(x - H) * (1 + std::exp(-2 * x)) / -std::expm1(-2 * H);
}
// 2 (cosh(nu h) - 1) / nu^2, and cosh(nu h)
inline double fitted_weight(double nu, double h) {
    const double x = nu * h;
    if (x < 1e-4) return h * h * (1 + x * x / 12);
    const double s = std::sinh(x / 2);
    return 4 * s * s / (nu * nu);
}

// One Dirichlet/Robin solve of w'' + q(tau) w' - nu_i^2 w = s on a uniform tau grid.
inline std::vector<double> solve_mode(double tau0, double h, int N, double nu, double xi, double drift,
                                      const std::vector<double>& src, double boundary) {
    std::vector<double> a(N + 1, 0), b(N + 1, 0), c(N + 1, 0), d(N + 1, 0);
    for (int i = 1; i < N; ++i) {
        const double tau = tau0 + i * h, r = std::exp(tau);
        const double nui = std::sqrt(nu * nu + xi * xi * r * r);
        const double w = fitted_weight(nui, h);
        const double ch = nui * h < 700 ? std::cosh(nui * h) : std::numeric_limits<double>::infinity();
        const double q = drift * r * w / (2 * h);
        if (std::isinf(ch)) {
            a[i] = c[i] = 0;
            b[i] = 1;
            d[i] = -src[i] / (nui * nui);
            continue;
        }
        a[i] = (1 - q) / ch;
        b[i] = -2;
        c[i] = (1 + q) / ch;
        d[i] = w * src[i] / ch;
    }
    // regular branch at the left end: w_1 + s/nu^2 = e^{nu h} (w_0 + s/nu^2)
    if (nu * h < 1e-8) {
        b[0] = -1;
        c[0] = 1;
        d[0] = h * h * src[0] / 2;
    } else {
        const double em = std::exp(-nu * h);
        b[0] = -1;
        c[0] = em;
        d[0] = -std::expm1(-nu * h) * src[0] / (nu * nu);
    }
    b[N] = 1;
    d[N] = boundary;
    return solve_tridiagonal(a, b, c, d);
}

}  // namespace detail

namespace detail {

// E_m(a) = int_0^1 e^{-a(1-z)} z^m dz, m = 0, 1, 2
inline double exp_moment(int m, double a) {
    if (a < 1) {
        double term = 1, sum = 0, fact = 1;
        for (int i = 1; i <= m; ++i) fact *= i;
        double den = 1;
        for (int i = 1; i <= m + 1; ++i) den *= i;
        for (int j = 0; j < 30; ++j) {
            sum += term / den;
            term *= -a;
            den *= j + m + 2;
        }
        return fact * sum;
    }
    const double e = std::exp(-a);
    if (m == 0) return (1 - e) / a;
    if (m == 1) return (a - 1 + e) / (a * a);
    return (a * a - 2 * a + 2 - 2 * e) / (a * a * a);
}

}  // namespace detail

class ModeSolution {
public:
    struct Mode {
        int k = 0;
        double nu = 0;
        std::vector<double> A, B;    // node values (cos, sin)
        std::vector<double> sA, sB;  // sources r^2 f_k at half spacing
        std::vector<double> JA, JB;  // w_tau - nu w at the nodes
    };

    ModeSolution(const ConeDisk& d, double tau0, double h, int N, double xi, bool plain)
        : disk_(d), tau0_(tau0), h_(h), N_(N), xi_(xi), plain_(plain) {}

    std::vector<ModeValues> modes(double r) const {
        detail::require(r >= 0 && r <= disk_.R * (1 + 1e-12), "evaluation point outside the disk");
        std::vector<ModeValues> out;
        out.reserve(modes_.size());
        const double tau = r > 0 ? std::log(r) : -std::numeric_limits<double>::infinity();
        for (const auto& m : modes_) out.push_back(eval_mode(m, tau, r));
        return out;
    }
    ConeJet jet(double r, double theta) const {
        auto j = jet_from_modes(disk_.beta, r, theta, modes(r));
        j.flat2 = j.tangential = -xi_ * xi_ * j.value;
        return j;
    }
    double value(double r, double theta) const { return jet(r, theta).value; }

    const ConeDisk& disk() const { return disk_; }
    double tail() const { return tail_; }
    int mode_count() const { return static_cast<int>(modes_.size()); }
    const std::vector<Mode>& raw_modes() const { return modes_; }
    double tau_min() const { return tau0_; }
    double step() const { return h_; }

    // J_{i+1} = e^{-nu h} J_i + int_cell e^{-nu(h - y)} s(y) dy, s quadratic per cell
    void finish(Mode& m) const {
        auto run = [&](const std::vector<double>& s) {
            std::vector<double> J(N_ + 1);
            J[0] = s[0] / (m.nu + 2);
            for (int i = 0; i < N_; ++i) J[i + 1] = cell_J(m.nu, h_, J[i], s[2 * i], s[2 * i + 1], s[2 * i + 2]);
            return J;
        };
        m.JA = run(m.sA);
        m.JB = run(m.sB);
    }

    std::vector<Mode> modes_;
    double tail_ = 0;

private:
    double cell_J(double nu, double x, double J0, double q0, double qm, double q1) const {
        const double h = h_, c1 = (-3 * q0 + 4 * qm - q1) / h, c2 = 2 * (q0 - 2 * qm + q1) / (h * h);
        const double a = nu * x;
        return std::exp(-a) * J0 + x * (q0 * detail::exp_moment(0, a) + c1 * x * detail::exp_moment(1, a) +
                                         c2 * x * x * detail::exp_moment(2, a));
    }

    ModeValues eval_mode(const Mode& m, double tau, double r) const {
        ModeValues v;
        v.k = m.k;
        if (r <= 0) {
            if (m.k == 0) {
                const double r0 = std::exp(tau0_);
                v.A = m.A[0] - m.JA[0] / 2;
                v.A2 = m.sA[0] / (2 * r0 * r0);
                v.B = m.B[0] - m.JB[0] / 2;
                v.B2 = m.sB[0] / (2 * r0 * r0);
            }
            return v;
        }
        std::array<double, 3> a, b;
        if (tau <= tau0_) {
            // regular continuation below the grid
            const double e = std::exp(m.nu * (tau - tau0_)), e2 = std::exp(2 * (tau - tau0_));
            auto below = [&](double w0, double J0, double s0) -> std::array<double, 3> {
                const double w = m.k == 0 ? w0 + J0 * (e2 - 1) / 2 : w0 * e;
                return {w, m.nu * w + J0 * e2, m.nu * m.nu * w + s0 * e2};
            };
            a = below(m.A[0], m.JA[0], m.sA[0]);
            b = below(m.B[0], m.JB[0], m.sB[0]);
        } else {
            const int i = std::min(N_ - 1, static_cast<int>((tau - tau0_) / h_));
            const double x = tau - (tau0_ + i * h_);
            const double rm = std::exp(tau0_ + (i + 0.5) * h_);
            const double nu = std::sqrt(m.nu * m.nu + xi_ * xi_ * rm * rm);
            auto one = [&](const std::vector<double>& w, const std::vector<double>& s,
                           const std::vector<double>& J) -> std::array<double, 3> {
                auto c = cell(nu, x, w[i], w[i + 1], s[2 * i], s[2 * i + 2]);
                if (!plain_) return c;
                const double q0 = s[2 * i], qm = s[2 * i + 1], q1 = s[2 * i + 2];
                const double y = x / h_;
                const double sx = q0 * (1 - y) * (1 - 2 * y) + 4 * qm * y * (1 - y) + q1 * y * (2 * y - 1);
                const double Jx = cell_J(m.nu, x, J[i], q0, qm, q1);
                return {c[0], m.nu * c[0] + Jx, m.nu * m.nu * c[0] + sx};
            };
            a = one(m.A, m.sA, m.JA);
            b = one(m.B, m.sB, m.JB);
        }
        // tau-derivatives to r-derivatives
        v.A = a[0];
        v.A1 = a[1] / r;
        v.A2 = (a[2] - a[1]) / (r * r);
        v.B = b[0];
        v.B1 = b[1] / r;
        v.B2 = (b[2] - b[1]) / (r * r);
        return v;
    }

    // w'' - nu^2 w = s with s linear on the cell, w matching the two node values
    std::array<double, 3> cell(double nu, double x, double w0, double w1, double s0, double s1) const {
        const double h = h_, sl = (s1 - s0) / h, s = s0 + sl * x;
        if (nu * h < 1e-6) {
            const double y = x / h;
            const double q0 = y * y / 2 - y * y * y / 6 - y / 3, q1 = (y * y * y - y) / 6;
            const double q0p = (y - y * y / 2 - 1.0 / 3) / h, q1p = (3 * y * y - 1) / (6 * h);
            const double w = w0 * (1 - y) + w1 * y + h * h * (s0 * q0 + s1 * q1);
            const double wp = (w1 - w0) / h + h * h * (s0 * q0p + s1 * q1p);
            return {w, wp, s};
        }
        const double n2 = nu * nu;
        const double A = w0 + s0 / n2, B = w1 + s1 / n2;
        const double H = nu * h;
        const double S1 = detail::sinh_ratio(nu * (h - x), H), S2 = detail::sinh_ratio(nu * x, H);
        const double C1 = detail::cosh_sinh_ratio(nu * (h - x), H), C2 = detail::cosh_sinh_ratio(nu * x, H);
        const double w = A * S1 + B * S2 - s / n2;
        const double wp = nu * (-A * C1 + B * C2) - sl / n2;
        return {w, wp, n2 * w + s};
    }

    ConeDisk disk_;
    double tau0_, h_;
    int N_;
    double xi_;
    bool plain_;  // pure Laplacian: derivatives from the regular-branch identity
};

namespace detail {

// cos/sin Fourier coefficients of samples on M uniform angles, k = 0..M/2-1
inline void real_dft(const std::vector<double>& v, std::vector<double>& ca, std::vector<double>& cb,
                     const std::vector<double>& cosv, const std::vector<double>& sinv) {
    const int M = static_cast<int>(v.size()), K = M / 2;
    ca.assign(K, 0);
    cb.assign(K, 0);
    for (int k = 0; k < K; ++k) {
        double sa = 0, sb = 0;
        for (int j = 0; j < M; ++j) {
            const int idx = (k * j) % M;
            sa += v[j] * cosv[idx];
            sb += v[j] * sinv[idx];
        }
        const double w = k == 0 ? 1.0 / M : 2.0 / M;
        ca[k] = w * sa;
        cb[k] = w * sb;
    }
}

}  // namespace detail

inline ModeSolution poisson_solve_modes(const ConeDisk& disk, const ConeFunction& f, const BoundaryFunction& g,
                                        const ModeSolveOptions& opt = {}) {
    disk.validate();
    const int M = opt.angular_nodes;
    detail::require(M >= 8 && M % 2 == 0, "angular_nodes must be even and >= 8");
    detail::require(opt.radial_cells >= 16, "radial_cells must be >= 16");
    detail::require(opt.log_span > 1, "log_span must be > 1");
    const int K = M / 2;
    const double tauR = std::log(disk.R), tau0 = tauR - opt.log_span;
    const int Nc = opt.radial_cells, Nf = 2 * Nc;
    const double hf = opt.log_span / Nf;

    std::vector<double> cosv(M), sinv(M);
    for (int j = 0; j < M; ++j) {
        cosv[j] = std::cos(2 * pi * j / M);
        sinv[j] = std::sin(2 * pi * j / M);
    }
    // sources s = r^2 f_k at half spacing
    std::vector<std::vector<double>> sA(K, std::vector<double>(Nf + 1)), sB = sA;
    std::vector<double> samp(M), ca, cb;
    double cmax = 0, tmax = 0;
    for (int i = 0; i <= Nf; ++i) {
        const double r = std::exp(tau0 + i * hf);
        for (int j = 0; j < M; ++j) samp[j] = f(r, 2 * pi * j / M);
        detail::real_dft(samp, ca, cb, cosv, sinv);
        for (int k = 0; k < K; ++k) {
            sA[k][i] = r * r * ca[k];
            sB[k][i] = r * r * cb[k];
            const double m = std::max(std::abs(ca[k]), std::abs(cb[k]));
            cmax = std::max(cmax, m);
            if (k > K / 2) tmax = std::max(tmax, m);
        }
    }
    for (int j = 0; j < M; ++j) samp[j] = g(2 * pi * j / M);
    std::vector<double> ga, gb;
    detail::real_dft(samp, ga, gb, cosv, sinv);
    double gmax = 0, gtail = 0;
    for (int k = 0; k < K; ++k) {
        const double m = std::max(std::abs(ga[k]), std::abs(gb[k]));
        gmax = std::max(gmax, m);
        if (k > K / 2) gtail = std::max(gtail, m);
    }
    const double tail = std::max(cmax > 0 ? tmax / cmax : 0.0, gmax > 0 ? gtail / gmax : 0.0);
    if (tail > opt.tail_tol)
        throw DomainError(detail::cat("mode truncation insufficient: relative tail ", tail, " with ", M,
                                      " angular nodes"));

    const bool plain = opt.xi == 0 && opt.drift == 0;
    ModeSolution sol(disk, tau0, opt.log_span / Nc, Nc, opt.xi, plain);
    sol.tail_ = tail;
    for (int k = 0; k < K; ++k) {
        ModeSolution::Mode m;
        m.k = k;
        m.nu = k / disk.beta;
        auto run = [&](const std::vector<double>& src, double bc) {
            std::vector<double> sc(Nc + 1);
            for (int i = 0; i <= Nc; ++i) sc[i] = src[2 * i];
            auto wc = detail::solve_mode(tau0, 2 * hf, Nc, m.nu, opt.xi, opt.drift, sc, bc);
            if (!opt.richardson) return wc;
            auto wf = detail::solve_mode(tau0, hf, Nf, m.nu, opt.xi, opt.drift, src, bc);
            for (int i = 0; i <= Nc; ++i) wc[i] = (4 * wf[2 * i] - wc[i]) / 3;
            return wc;
        };
        m.A = run(sA[k], ga[k]);
        m.B = run(sB[k], gb[k]);
        m.sA = std::move(sA[k]);
        m.sB = std::move(sB[k]);
        sol.finish(m);
        sol.modes_.push_back(std::move(m));
    }
    return sol;
}

// ---- Green representation --------------------------------------------------

struct GreenValue {
    double value = 0, harmonic = 0, potential = 0, error = 0;
    std::size_t evaluations = 0;
};

// v(x) = h(x) + (1/2pi) int f(y) log|(z - w)/(1 - conj(w) z)| dA_cone(y),
// z = (r_x/R)^{1/beta} e^{i theta_x}, w likewise for y, dA_cone = beta r dr dtheta.
inline GreenValue green_representation(const ConeDisk& disk, const ConeFunction& f, const BoundaryFunction& g,
                                       double r, double theta, double tol = 1e-10) {
    disk.validate();
    detail::require(r >= 0 && r < disk.R, "Green representation needs 0 <= r < R");
    using cd = std::complex<double>;
    const double ib = 1 / disk.beta, R = disk.R;
    const cd z = std::polar(std::pow(r / R, ib), theta);
    GreenValue out;

    // harmonic extension by the Poisson kernel
    auto poisson = [&](double phi) {
        const cd e = std::polar(1.0, phi);
        return (1 - std::norm(z)) / std::norm(e - z) * g(phi) / (2 * pi);
    };
    try {
        auto h = integrate(poisson, theta - pi, theta + pi, tol, tol);
        out.harmonic = h.value;
        out.error += h.error;
        out.evaluations += h.evaluations;

        auto inner = [&](double rr) {
            const cd zr = std::polar(std::pow(rr / R, ib), 0.0);
            auto k = [&](double t) {
                const cd w = zr * std::polar(1.0, t);
                return f(rr, t) * std::log(std::abs((z - w) / (1.0 - std::conj(w) * z)));
            };
            auto q = integrate(k, theta, theta + 2 * pi, tol * 0.1, tol * 0.1, 8000);
            out.evaluations += q.evaluations;
            return disk.beta * rr * q.value / (2 * pi);
        };
        std::vector<double> br = {0.0};
        if (r > 0) br.push_back(r);
        br.push_back(R);
        auto v = integrate_pieces(inner, br, tol, tol);
        out.potential = v.value;
        out.error += v.error;
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(detail::cat("quadrature tolerance not met near w = z: ", e.what()));
    }
    out.value = out.harmonic + out.potential;
    return out;
}

// ---- polar-grid finite differences ------------------------------------------

struct PolarGrid {
    double beta = 0.25, R = 0.5;
    std::vector<double> r;  // r[0] = 0, graded toward 0
    int M = 64;             // angular nodes
    double theta(int j) const { return 2 * pi * j / M; }
    std::size_t index(std::size_t i, int j) const { return i * M + j; }
    std::size_t size() const { return r.size() * M; }
};

// r_i = R (i/N)^q, q = min(1/beta, 4)
inline PolarGrid make_polar_grid(const ConeDisk& d, int radial, int angular = 64) {
    d.validate();
    detail::require(radial >= 4, "grid violation: need >= 4 radial nodes");
    detail::require(angular >= 64, "grid violation: need >= 64 angular nodes");
    PolarGrid g;
    g.beta = d.beta;
    g.R = d.R;
    g.M = angular;
    const double q = std::min(1 / d.beta, 4.0);
    for (int i = 0; i <= radial; ++i) g.r.push_back(d.R * std::pow(static_cast<double>(i) / radial, q));
    return g;
}

inline std::vector<double> sample(const PolarGrid& g, const ConeFunction& u) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.r.size(); ++i)
        for (int j = 0; j < g.M; ++j) v[g.index(i, j)] = u(g.r[i], g.theta(j));
    return v;
}

// Second-order differences; at r = 0 only the circle mean of the first ring
// is used. Entries on the outer ring are left as NaN.
inline std::vector<double> laplacian_apply(const PolarGrid& g, const std::vector<double>& u) {
    detail::require(u.size() == g.size(), "grid violation: sample count does not match grid");
    detail::require(g.M >= 64 && g.r.size() >= 4 && g.r[0] == 0, "grid violation: bad polar grid");
    const int M = g.M;
    const double dt = 2 * pi / M, b2 = g.beta * g.beta;
    std::vector<double> out(u.size(), std::numeric_limits<double>::quiet_NaN());
    double mean1 = 0;
    for (int j = 0; j < M; ++j) mean1 += u[g.index(1, j)];
    mean1 /= M;
    const double c0 = 4 * (mean1 - u[g.index(0, 0)]) / (g.r[1] * g.r[1]);
    for (int j = 0; j < M; ++j) out[g.index(0, j)] = c0;
    for (std::size_t i = 1; i + 1 < g.r.size(); ++i) {
        const double r = g.r[i], hm = r - g.r[i - 1], hp = g.r[i + 1] - r;
        for (int j = 0; j < M; ++j) {
            const double um = u[g.index(i - 1, j)], u0 = u[g.index(i, j)], up = u[g.index(i + 1, j)];
            const double urr = 2 * ((up - u0) / hp - (u0 - um) / hm) / (hp + hm);
            const double ur = (hm * hm * up - hp * hp * um + (hp * hp - hm * hm) * u0) / (hp * hm * (hp + hm));
            const double ut = (u[g.index(i, (j + 1) % M)] - 2 * u0 + u[g.index(i, (j + M - 1) % M)]) / (dt * dt);
            out[g.index(i, j)] = urr + ur / r + ut / (b2 * r * r);
        }
    }
    return out;
}

// ---- cylinder picture ------------------------------------------------------

struct CylinderReport {
    double t0 = 0;
    double gradient_identity = 0;     // sup | |grad_c U| - r |grad u| |
    double laplacian_defect = 0;      // sup |Delta_c U - r^2 f| on the interior grid (FD)
    double laplacian_defect_fine = 0; // same at half spacing
    // sup_D |nabla_c U| / (r0 sup_D |nabla u|) and
    // sup_D |Hess_c U| / (r0^2 sup_D |Hess u| + r0 sup_D |nabla u|)
    std::array<double, 2> norm_ratio{};
    double bound = std::exp(4.0);
};

// U(t, theta) = u(e^t, theta) on D = {|t - t0| < 2}, g_c = dt^2 + beta^2 dtheta^2.
template <class Sol>
CylinderReport cylinder_transform(const ConeDisk& disk, const Sol& u, const ConeFunction& f, double t0,
                                  int nt = 64, int ntheta = 64) {
    disk.validate();
    detail::require(std::exp(t0 + 2 + 2.0 / nt) <= disk.R, "cylinder window must stay inside the disk");
    CylinderReport rep;
    rep.t0 = t0;
    const double r0 = std::exp(t0);
    std::array<double, 2> cyl{}, cone{};
    for (int i = 0; i <= nt; ++i) {
        const double t = t0 - 2 + 4.0 * i / nt, r = std::exp(t);
        for (int j = 0; j < ntheta; ++j) {
            const double th = 2 * pi * j / ntheta;
            const ConeJet J = u.jet(r, th);
            // g_c-derivatives: d_t = r d_r, beta^{-1} d_theta = r (beta r)^{-1} d_theta
            const double gc = std::hypot(r * J.grad[0], r * J.grad[1]);
            rep.gradient_identity = std::max(rep.gradient_identity, std::abs(gc - r * J.grad_norm()));
            // Hess_c U = r^2 Hess u + r (g0, g1; g1, -g0)
            const double c11 = r * r * J.hess[0] + r * J.grad[0], c12 = r * r * J.hess[1] + r * J.grad[1],
                         c22 = r * r * J.hess[2] - r * J.grad[0];
            cyl[0] = std::max(cyl[0], gc);
            cyl[1] = std::max(cyl[1], std::sqrt(c11 * c11 + 2 * c12 * c12 + c22 * c22));
            cone[0] = std::max(cone[0], J.grad_norm());
            cone[1] = std::max(cone[1], J.hess_norm());
        }
    }
    rep.norm_ratio = {cyl[0] / (r0 * cone[0]), cyl[1] / (r0 * r0 * cone[1] + r0 * cone[0])};
    auto defect = [&](int m, int q) {
        const double ht = 2.0 / m, hth = 2 * pi / q;
        auto U = [&](double tt, double th) { return u.value(std::exp(tt), th); };
        double d = 0;
        for (int i = -m / 2; i <= m / 2; ++i) {
            const double t = t0 + i * ht, r = std::exp(t);
            for (int j = 0; j < q; j += q / 16) {
                const double th = hth * j;
                const double Utt = (U(t + ht, th) - 2 * U(t, th) + U(t - ht, th)) / (ht * ht);
                const double Uqq = (U(t, th + hth) - 2 * U(t, th) + U(t, th - hth)) / (hth * hth);
                d = std::max(d, std::abs(Utt + Uqq / (disk.beta * disk.beta) - r * r * f(r, th)));
            }
        }
        return d;
    };
    rep.laplacian_defect = defect(nt, ntheta);
    rep.laplacian_defect_fine = defect(2 * nt, 2 * ntheta);
    return rep;
}

}  // namespace conelab
