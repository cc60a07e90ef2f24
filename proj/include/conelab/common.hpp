#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace conelab {

inline constexpr double pi = std::numbers::pi;
inline constexpr double eps = std::numeric_limits<double>::epsilon();

// Precondition violations (bad n, t >= 0, beta out of range, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Iterative or quadrature procedures that failed to meet their tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class... Args>
std::string cat(const Args&... args) {
    std::ostringstream os;
    os.precision(17);
    (os << ... << args);
    return os.str();
}

template <class... Args>
void require(bool ok, const Args&... args) {
    if (!ok) throw DomainError(cat(args...));
}

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw DomainError(cat(what, " must be finite"));
}

}  // namespace detail

enum class Sign : int { Negative = -1, Positive = 1 };

inline constexpr double sigma(Sign s) { return static_cast<int>(s); }

inline const char* to_string(Sign s) { return s == Sign::Negative ? "neg" : "pos"; }

// log(1 + e^x) without overflow.
inline double softplus(double x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace conelab
