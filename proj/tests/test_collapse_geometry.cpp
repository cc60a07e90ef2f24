#include <gtest/gtest.h>

#include "conelab/collapse_geometry.hpp"

using namespace conelab;

namespace {
const PotentialProfile& pos(int n) { return profile(Sign::Positive, n); }
const double ninf = -std::numeric_limits<double>::infinity();
}  // namespace

TEST(Length, IntervalLength) {
    EXPECT_NEAR(radial_length(pos(1), ninf, 0.0), pi / 2, 1e-8);
    for (int n = 1; n <= 3; ++n)
        EXPECT_NEAR(radial_length(pos(n), ninf, 0.0), std::sqrt(2.0 / (n + 1)) * pi / 2, 1e-8);
}

TEST(Length, Additive) {
    const auto& p = pos(2);
    EXPECT_NEAR(radial_length(p, ninf, -3.0) + radial_length(p, -3.0, -0.2) + radial_length(p, -0.2, 0.0),
                radial_length(p, ninf, 0.0), 1e-12);
}

TEST(Length, MatchesArclengthCoordinate) {
    // length from -inf to u equals sqrt(2/(n+1)) s(u)
    for (int n = 1; n <= 3; ++n)
        for (double u : {-5.0, -1.0, -0.01})
            EXPECT_NEAR(radial_length(pos(n), ninf, u), std::sqrt(2.0 / (n + 1)) * to_moment_coords(pos(n), u).s,
                        1e-10);
}

TEST(Length, NegativeCaseUnbounded) {
    const auto L = partial_lengths(profile(Sign::Negative, 2), {-0.5, -1e-1, -1e-2, -1e-3, -1e-4, -1e-6});
    for (std::size_t i = 0; i + 1 < L.size(); ++i) EXPECT_LT(L[i], L[i + 1]);
    // grows like log near the cusp: equal increments per decade
    EXPECT_GT(L.back(), 10.0);
    EXPECT_NEAR(L[3] - L[2], L[4] - L[3], 1e-3);
}

TEST(Volume, ClosedFormAtOne) {
    for (double b : {0.2, 0.05}) {
        const auto v = model_volume(CollapseProfile(pos(1), b));
        EXPECT_NEAR(v.closed_form, 2 * pi * b, 1e-15);
        EXPECT_NEAR(v.quadrature, 2 * pi * b, 1e-8 * b);
    }
}

TEST(Volume, LinearInDivisorVolume) {
    const auto a = model_volume(CollapseProfile(pos(2), 0.1, 1.0));
    const auto b = model_volume(CollapseProfile(pos(2), 0.1, 2.0));
    EXPECT_NEAR(b.quadrature, 2 * a.quadrature, 1e-14);
}

TEST(Volume, QuadratureMatchesClosedForm) {
    for (int n = 1; n <= 3; ++n)
        for (double b : {0.3, 0.1, 0.01}) {
            const auto v = model_volume(CollapseProfile(pos(n), b, 1.5));
            EXPECT_NEAR(v.quadrature / v.closed_form, 1.0, 1e-8);
        }
}

TEST(Volume, ExponentIsDimension) {
    for (int n = 1; n <= 3; ++n)
        EXPECT_NEAR(volume_exponent_fit(n, {0.2, 0.1, 0.05, 0.02, 0.01}).exponent, n, 0.01);
}

TEST(LimitMeasure, Normalized) {
    for (int n = 1; n <= 3; ++n) {
        const auto rows = limit_measure_pushforward(CollapseProfile(pos(n), 0.1), {0.0, pi / 2});
        EXPECT_EQ(rows[0].cdf, 0.0);
        EXPECT_NEAR(rows[1].cdf, 1.0, 1e-10);
    }
}

TEST(LimitMeasure, OneMinusCosineAtOne) {
    for (const auto& r : limit_measure_pushforward(CollapseProfile(pos(1), 0.1), linspace(0, pi / 2, 33)))
        EXPECT_NEAR(r.cdf, 1 - std::cos(r.s), 1e-6);
}

TEST(LimitMeasure, SupErrorAllDimensions) {
    for (int n = 1; n <= 3; ++n) {
        double worst = 0;
        for (const auto& r : limit_measure_pushforward(CollapseProfile(pos(n), 0.1), linspace(0, pi / 2, 41)))
            worst = std::max(worst, r.error);
        EXPECT_LT(worst, 1e-6);
    }
}

TEST(LimitMeasure, DensityConstant) {
    // d/ds of 1 - cos^{2n/(n+1)} s = c sin s cos^{(n-1)/(n+1)} s
    for (int n = 1; n <= 3; ++n) {
        const double s = 0.6, h = 1e-5;
        const auto rows = limit_measure_pushforward(CollapseProfile(pos(n), 0.1), {s - h, s + h});
        const double dens = (rows[1].cdf - rows[0].cdf) / (2 * h);
        EXPECT_NEAR(dens / (std::sin(s) * std::pow(std::cos(s), (n - 1.0) / (n + 1))), limit_density_constant(n),
                    1e-5);
    }
}

TEST(Regimes, Classification) {
    EXPECT_EQ(classify_regime(BasePoint::OffDivisor, rate_of_exponent(1 + 1.0 / 2, 2)).limit, LimitSpace::TianYau);
    EXPECT_EQ(classify_regime(BasePoint::OnDivisor, rate_of_exponent(1, 2)).limit, LimitSpace::HalfLineTimesD);
    EXPECT_EQ(classify_regime(BasePoint::OnDivisor, rate_of_exponent(0.5, 2)).limit, LimitSpace::HalfLine);
    EXPECT_EQ(classify_regime(BasePoint::OffDivisor, rate_of_exponent(0, 2)).limit, LimitSpace::Interval);
    EXPECT_EQ(classify_regime(BasePoint::OnDivisor, rate_of_exponent(1.2, 2)).limit, LimitSpace::HalfLineTimesCn1);
    EXPECT_EQ(classify_regime(BasePoint::OffDivisor, rate_of_exponent(3, 2)).limit, LimitSpace::TrivialBubble);
    EXPECT_THROW(rate_of_exponent(-1, 2), DomainError);
}

TEST(Regimes, OffDivisorWitnessesVanish) {
    const auto w = regime_witness(2, BasePoint::OffDivisor, 0.5, {0.1, 0.03, 0.01, 0.003, 0.001});
    for (std::size_t i = 0; i + 1 < w.betas.size(); ++i) {
        EXPECT_LT(w.fiber[i + 1], w.fiber[i]);
        EXPECT_LT(w.divisor[i + 1], w.divisor[i]);
    }
    EXPECT_GT(w.fiber_fit.exponent, 0);
    EXPECT_GT(w.divisor_fit.exponent, 0);
}

TEST(Regimes, NoRescaleIsCaseA) {
    const auto w = regime_witness(2, BasePoint::OffDivisor, 0.0, {0.1, 0.05, 0.02});
    for (std::size_t i = 0; i < w.betas.size(); ++i) {
        const double b = w.betas[i];
        EXPECT_DOUBLE_EQ(w.fiber[i], metric_at(pos(2), b, -b).coeff_eta2);
    }
}

TEST(Regimes, OnDivisorAtBetaScale) {
    const auto w = regime_witness(2, BasePoint::OnDivisor, 1.0, {0.1, 0.05, 0.02});
    for (double d : w.divisor) EXPECT_NEAR(d, 1.0, 1e-12);
}

TEST(Errors, Preconditions) {
    EXPECT_THROW(CollapseProfile(pos(1), 0.0), DomainError);
    EXPECT_THROW(CollapseProfile(pos(1), 0.1, -1.0), DomainError);
    EXPECT_THROW(limit_measure_pushforward(CollapseProfile(pos(1), 0.1), {2.0}), DomainError);
    EXPECT_THROW(regime_witness(2, BasePoint::OnDivisor, 1.0, {0.1, 0.05}), DomainError);
}
