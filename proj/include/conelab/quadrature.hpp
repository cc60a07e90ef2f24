#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "conelab/common.hpp"

namespace conelab {

struct QuadResult {
    double value = 0;
    double error = 0;
    int evaluations = 0;
};

namespace detail {

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk21(F& f, double a, double b, int& evals) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    static const auto& x = GK::abscissa();
    static const auto& wk = GK::weights();
    static const auto& wg = boost::math::quadrature::gauss<double, 10>::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    // 21-point rule: x[0] = 0 is a Kronrod node; odd indices are Gauss nodes.
    double fc = f(c);
    double k = wk[0] * fc;
    double g = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double fp = f(c + h * x[i]);
        const double fm = f(c - h * x[i]);
        k += wk[i] * (fp + fm);
        if (i % 2 == 1) g += wg[i / 2] * (fp + fm);
    }
    evals += 21;
    return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (21/10) on [a, b]; stops when the summed
// error estimate is below max(abs_tol, rel_tol * |I|).
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol = 1e-13, double rel_tol = 1e-13,
                     int max_segments = 4000) {
    if (a == b) return {};
    if (!(std::isfinite(a) && std::isfinite(b)))
        throw DomainError("integrate: finite limits required");
    const double s = b > a ? 1.0 : -1.0;
    if (s < 0) std::swap(a, b);
    int evals = 0;
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gk21(f, a, b, evals);
    double total = first.value, err = first.error;
    heap.push(first);
    int segments = 1;
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (segments >= max_segments) {
            throw ConvergenceError(detail::cat("integrate: no convergence on [", a, ", ", b,
                                               "], error estimate ", err));
        }
        auto worst = heap.top();
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        if (!(m > worst.a && m < worst.b)) {
            throw ConvergenceError("integrate: interval underflow");
        }
        auto l = detail::gk21(f, worst.a, m, evals);
        auto r = detail::gk21(f, m, worst.b, evals);
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++segments;
        if (heap.size() > 64 && segments % 64 == 0) {
            // resum to shed accumulated rounding in the running totals
            auto copy = heap;
            total = 0;
            err = 0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().error;
                copy.pop();
            }
        }
    }
    return {s * total, err, evals};
}

// Sum of integrals over consecutive breakpoints.
template <class F>
QuadResult integrate_pieces(F&& f, const std::vector<double>& breaks, double abs_tol = 1e-13,
                            double rel_tol = 1e-13) {
    QuadResult out;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        auto r = integrate(f, breaks[i], breaks[i + 1], abs_tol, rel_tol);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    return out;
}

// Fixed composite Gauss-Legendre, 20 nodes per panel.
template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
    using G = boost::math::quadrature::gauss<double, 20>;
    static const auto& x = G::abscissa();
    static const auto& w = G::weights();
    const double h = (b - a) / panels;
    double sum = 0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h, r = 0.5 * h;
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * (f(c + r * x[i]) + f(c - r * x[i]));
        sum += s * r;
    }
    return sum;
}

}  // namespace conelab
