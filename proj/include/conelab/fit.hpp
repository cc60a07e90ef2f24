#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "conelab/common.hpp"

namespace conelab {

// Least-squares line through (x_i, log|y_i|) or (log x_i, log|y_i|).
struct ScalingFit {
    double exponent = 0;   // slope
    double intercept = 0;
    double stderr_slope = 0;
    double band = 0;       // 95% half-width on the slope (normal approximation)
    double r2 = 0;
    double x_min = 0, x_max = 0;
    int points = 0;

    bool within(double expected, double tol) const { return std::abs(exponent - expected) <= tol; }
};

inline ScalingFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    detail::require(x.size() == y.size(), "linear_fit: size mismatch");
    const int m = static_cast<int>(x.size());
    if (m < 3) throw DomainError("linear_fit: need at least 3 points");
    double mx = 0, my = 0;
    for (int i = 0; i < m; ++i) {
        detail::require_finite(x[i], "fit abscissa");
        detail::require_finite(y[i], "fit ordinate");
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0) throw DomainError("linear_fit: degenerate abscissas");
    ScalingFit f;
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    double rss = 0;
    for (int i = 0; i < m; ++i) {
        const double r = y[i] - f.intercept - f.exponent * x[i];
        rss += r * r;
    }
    f.stderr_slope = m > 2 ? std::sqrt(rss / (m - 2) / sxx) : 0;
    f.band = 1.96 * f.stderr_slope;
    f.r2 = syy > 0 ? 1 - rss / syy : 1;
    f.points = m;
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    f.x_min = *lo;
    f.x_max = *hi;
    return f;
}

// slope of log|y| against x
inline ScalingFit semilog_fit(const std::vector<double>& x, const std::vector<double>& y,
                              int min_points = 8) {
    if (static_cast<int>(x.size()) < min_points)
        throw DomainError(detail::cat("grid too short for regression (", x.size(), " < ",
                                      min_points, ")"));
    std::vector<double> ly(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) ly[i] = std::log(std::abs(y[i]));
    return linear_fit(x, ly);
}

// slope of log|y| against log|x|
inline ScalingFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y,
                             int min_points = 3) {
    if (static_cast<int>(x.size()) < min_points)
        throw DomainError(detail::cat("grid too short for regression (", x.size(), " < ",
                                      min_points, ")"));
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(std::abs(x[i]));
        ly[i] = std::log(std::abs(y[i]));
    }
    auto f = linear_fit(lx, ly);
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    f.x_min = *lo;
    f.x_max = *hi;
    return f;
}

inline std::vector<double> linspace(double a, double b, int m) {
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) v[i] = m == 1 ? a : a + (b - a) * i / (m - 1);
    return v;
}

inline std::vector<double> logspace(double a, double b, int m) {
    auto v = linspace(std::log(a), std::log(b), m);
    for (auto& x : v) x = std::exp(x);
    return v;
}

// Ridders' extrapolated central difference for f'(x).
template <class F>
double ridders_derivative(F&& f, double x, double h, double* error = nullptr) {
    constexpr int ntab = 10;
    constexpr double con = 1.4, con2 = con * con, safe = 2.0;
    double a[ntab][ntab];
    double err = std::numeric_limits<double>::max(), ans = 0;
    a[0][0] = (f(x + h) - f(x - h)) / (2 * h);
    for (int i = 1; i < ntab; ++i) {
        h /= con;
        a[0][i] = (f(x + h) - f(x - h)) / (2 * h);
        double fac = con2;
        for (int j = 1; j <= i; ++j) {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1);
            fac *= con2;
            const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
            if (e <= err) {
                err = e;
                ans = a[j][i];
            }
        }
        if (std::abs(a[i][i] - a[i - 1][i - 1]) >= safe * err) break;
    }
    if (error) *error = err;
    return ans;
}

}  // namespace conelab
