#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "conelab/common.hpp"

namespace conelab {

// Thomas algorithm: a sub-, b main, c super-diagonal (a[0], c[m-1] unused).
inline std::vector<double> solve_tridiagonal(std::vector<double> a, std::vector<double> b,
                                             std::vector<double> c, std::vector<double> d) {
    const std::size_t m = b.size();
    detail::require(m >= 1 && a.size() == m && c.size() == m && d.size() == m,
                    "tridiagonal: size mismatch");
    for (std::size_t i = 1; i < m; ++i) {
        detail::require(b[i - 1] != 0, "tridiagonal: zero pivot");
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    detail::require(b[m - 1] != 0, "tridiagonal: zero pivot");
    std::vector<double> x(m);
    x[m - 1] = d[m - 1] / b[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

// Chebyshev-Gauss-Lobatto nodes on [a, b] (ascending) and the first-derivative matrix.
struct ChebElement {
    std::vector<double> x;
    Eigen::MatrixXd D, D2;
};

inline ChebElement cheb_element(double a, double b, int N) {
    detail::require(N >= 2 && b > a, "chebyshev element: need N >= 2 and b > a");
    ChebElement e;
    std::vector<double> z(N + 1);
    for (int k = 0; k <= N; ++k) z[k] = -std::cos(pi * k / N);
    Eigen::MatrixXd D(N + 1, N + 1);
    auto cw = [&](int k) { return (k == 0 || k == N ? 2.0 : 1.0) * (k % 2 ? -1.0 : 1.0); };
    for (int i = 0; i <= N; ++i) {
        double diag = 0;
        for (int j = 0; j <= N; ++j) {
            if (i == j) continue;
            D(i, j) = cw(i) / cw(j) / (z[i] - z[j]);
            diag -= D(i, j);
        }
        D(i, i) = diag;
    }
    const double s = 2 / (b - a);
    e.x.resize(N + 1);
    for (int k = 0; k <= N; ++k) e.x[k] = a + (z[k] + 1) / s;
    e.D = s * D;
    e.D2 = e.D * e.D;
    return e;
}

}  // namespace conelab
