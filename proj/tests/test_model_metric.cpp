#include <gtest/gtest.h>

#include <random>

#include "conelab/model_metric.hpp"

using namespace conelab;

namespace {
const PotentialProfile& pos(int n) { return profile(Sign::Positive, n); }
const PotentialProfile& neg(int n) { return profile(Sign::Negative, n); }
}  // namespace

TEST(Metric, CoefficientsPositive) {
    for (Sign s : {Sign::Negative, Sign::Positive})
        for (int n = 1; n <= 3; ++n)
            for (double u : linspace(-30, -1e-3, 60)) {
                const auto m = metric_at(profile(s, n), 0.1, u);
                EXPECT_GT(m.coeff_du2, 0);
                EXPECT_GT(m.coeff_eta2, 0);
                EXPECT_GT(m.coeff_gD, 0);
            }
}

TEST(Metric, DivisorCoefficientTendsToBeta) {
    for (int n = 1; n <= 3; ++n) EXPECT_NEAR(metric_at(pos(n), 0.2, -35).coeff_gD / 0.2, 1.0, 1e-12);
}

TEST(Metric, BetaOneReproducesPotential) {
    const auto& p = neg(2);
    for (double u : {-4.0, -1.0, -0.3}) {
        const auto m = metric_at(p, 1.0, u);
        const auto j = p.jet(u);
        EXPECT_DOUBLE_EQ(m.coeff_du2, j.d2 / 2);
        EXPECT_DOUBLE_EQ(m.coeff_eta2, 2 * j.d2);
        EXPECT_DOUBLE_EQ(m.coeff_gD, j.d1);
    }
}

TEST(Metric, VolumeDensityIsProductOfCoefficients) {
    for (int n = 1; n <= 3; ++n)
        for (double u : {-10.0, -2.0, -0.1}) {
            const double b = 0.07;
            const auto m = metric_at(pos(n), b, u);
            const double lhs = std::sqrt(m.coeff_du2 * m.coeff_eta2) * std::pow(m.coeff_gD, n - 1);
            EXPECT_NEAR(lhs / volume_density(pos(n), b, u), 1.0, 1e-13);
        }
}

TEST(MomentCoords, EndpointLimits) {
    const auto far = to_moment_coords(pos(2), -40);
    EXPECT_NEAR(far.x, 1.0, 1e-12);
    EXPECT_LT(far.s, 1e-7);
    const auto near = to_moment_coords(pos(2), -1e-9);
    EXPECT_LT(near.x, 1e-3);
    EXPECT_NEAR(near.s, pi / 2, 1e-3);
}

TEST(MomentCoords, RoundTrip) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(std::log(1e-6), std::log(30.0));
    for (int n = 1; n <= 3; ++n)
        for (int k = 0; k < 1000; ++k) {
            const double u = -std::exp(U(rng));
            const double back = from_s(pos(n), to_moment_coords(pos(n), u).s);
            EXPECT_NEAR(back, u, 1e-10 * std::max(1.0, std::abs(u)));
        }
}

TEST(MomentCoords, DecreasingInDistance) {
    double prev = 2;
    for (double u : linspace(-0.5, -1e-4, 50)) {
        const double x = to_moment_coords(pos(2), u).x;
        EXPECT_LT(x, prev);
        prev = x;
    }
}

TEST(MetricInS, LimitIntervalCoefficient) {
    for (int n = 1; n <= 3; ++n)
        for (double s : {0.1, 0.7, 1.5}) {
            EXPECT_NEAR(metric_in_s(pos(n), 0.1, s).coeff_ds2, 2.0 / (n + 1), 1e-10);
            EXPECT_NEAR(metric_pullback(pos(n), 0.1, s).coeff_ds2, 2.0 / (n + 1), 1e-8);
        }
    EXPECT_NEAR(metric_in_s(pos(2), 0.3, 1e-9).coeff_gD, 0.3, 1e-12);
}

TEST(MetricInS, MatchesPullback) {
    for (int n = 1; n <= 3; ++n) {
        const auto a = metric_in_s(pos(n), 0.1, pi / 4);
        const auto b = metric_pullback(pos(n), 0.1, pi / 4);
        EXPECT_NEAR(a.coeff_eta2, b.coeff_eta2, 1e-8);
        EXPECT_NEAR(a.coeff_gD, b.coeff_gD, 1e-10);
    }
}

TEST(Curvature, ClosedFormAtUnitX) {
    for (int n = 1; n <= 3; ++n) {
        const auto q = curvature_closed_form(neg(n), 0.0);
        EXPECT_NEAR(q[3], 1.0 / (2 * (n + 1)), 1e-15);
    }
}

TEST(Curvature, TwoRoutesAgree) {
    const std::vector<double> betas = {0.2, 0.1, 0.05, 0.02};
    for (int n = 1; n <= 3; ++n) {
        EXPECT_LT(curvature_scan(neg(n), betas, linspace(-30, -0.01, 200)).max_disagreement, 1e-8);
        std::vector<double> ug = logspace(1e-6, 30, 200);
        for (auto& u : ug) u = -u;
        EXPECT_LT(curvature_scan(pos(n), betas, ug).max_disagreement, 1e-8);
    }
}

TEST(Curvature, NegativeCaseBetaFreeBound) {
    for (int n = 1; n <= 3; ++n) {
        const auto s = curvature_scan(neg(n), {0.2, 0.1, 0.05, 0.02}, linspace(-40, -1e-3, 300));
        for (double m : s.per_beta_max) EXPECT_EQ(m, s.per_beta_max[0]);
        EXPECT_LE(s.max_q, 5.0);
    }
}

TEST(Curvature, PositiveCaseSingleConstant) {
    for (int n = 1; n <= 3; ++n) {
        std::vector<double> ug = logspace(1e-8, 30, 200);
        for (auto& u : ug) u = -u;
        const auto s = curvature_scan(pos(n), {0.2, 0.1, 0.05, 0.02}, ug);
        EXPECT_TRUE(std::isfinite(s.C));
        for (double c : s.per_beta_C) EXPECT_LE(c, s.C);
    }
}

TEST(Expansions, DerivativeNearZero) {
    std::vector<double> ug = logspace(1e-4, 1e-2, 16);
    for (auto& u : ug) u = -u;
    for (int n = 1; n <= 3; ++n) EXPECT_NEAR(derivative_expansion_fit(pos(n), ug).exponent, 1 + 2.0 / n, 0.1);
}

TEST(Expansions, NearDivisorDeviationQuadratic) {
    const auto g = linspace(-30, -12, 16);
    for (int n = 1; n <= 3; ++n) EXPECT_NEAR(near_divisor_fit(pos(n), g).exponent, 2.0, 0.05);
}

TEST(Zones, ThreeZones) {
    for (int n = 1; n <= 2; ++n) {
        std::vector<double> K;
        for (double b : {0.1, 0.05, 0.02, 0.01}) {
            EXPECT_LT(cusp_zone_comparison(n, b, Zone::BetaTtoZero, {-1e-3 / b}).max_deviation, 0.01);
            EXPECT_LT(cusp_zone_comparison(n, b, Zone::BetaTtoMinusInfinity, {-30 / b}).max_deviation, 0.01);
            K.push_back(cusp_zone_comparison(n, b, Zone::Middle, {-1 / b}).K);
        }
        const auto [lo, hi] = std::minmax_element(K.begin(), K.end());
        EXPECT_LT((*hi - *lo) / *lo, 0.2);
        EXPECT_GE(*lo, 1.0);
    }
}

TEST(Errors, Preconditions) {
    EXPECT_THROW(metric_at(pos(1), 0.1, 0.0), DomainError);
    EXPECT_THROW(metric_at(pos(1), 0.0, -1.0), DomainError);
    EXPECT_THROW(to_moment_coords(neg(1), -1.0), DomainError);
    EXPECT_THROW(from_s(pos(1), 0.0), DomainError);
    EXPECT_THROW(from_s(pos(1), pi / 2), DomainError);
}
