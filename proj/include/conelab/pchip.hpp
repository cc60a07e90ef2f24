#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "conelab/common.hpp"

namespace conelab {

// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes).
class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t m = x_.size();
        detail::require(m >= 2 && y_.size() == m, "pchip: need matching arrays of size >= 2");
        for (std::size_t i = 0; i + 1 < m; ++i)
            detail::require(x_[i + 1] > x_[i], "pchip: abscissas must increase");
        std::vector<double> h(m - 1), del(m - 1);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            h[i] = x_[i + 1] - x_[i];
            del[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        d_.assign(m, 0.0);
        if (m == 2) {
            d_[0] = d_[1] = del[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < m; ++i) {
            if (del[i - 1] * del[i] > 0) {
                const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
        }
        d_[0] = end_slope(h[0], h[1], del[0], del[1]);
        d_[m - 1] = end_slope(h[m - 2], h[m - 3], del[m - 2], del[m - 3]);
    }

    double operator()(double x) const {
        const std::size_t i = segment(x);
        const double h = x_[i + 1] - x_[i], s = (x - x_[i]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }

    // index i with x_[i] <= x <= x_[i+1], clamped to the table
    std::size_t segment(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        return std::min(i, x_.size() - 2);
    }

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }

private:
    static double end_slope(double h0, double h1, double d0, double d1) {
        double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0) return 0;
        if (d0 * d1 <= 0 && std::abs(d) > 3 * std::abs(d0)) return 3 * d0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

}  // namespace conelab
