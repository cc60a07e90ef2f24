#include <gtest/gtest.h>

#include <random>

#include "conelab/calabi_potential.hpp"
#include "conelab/model_metric.hpp"

using namespace conelab;

namespace {

// mpmath, 30 digits
constexpr double I_ref[] = {1.3862943611198906188, 2.5548181151192734624, 3.6502378684747325475};
constexpr double J_ref[] = {1.3862943611198906047, 0.7410187508850556118, 0.50864521488493930902};

const PotentialProfile& pos(int n) { return profile(Sign::Positive, n); }
const PotentialProfile& neg(int n) { return profile(Sign::Negative, n); }

}  // namespace

TEST(F, PositiveStartsAtZero) {
    for (int n = 1; n <= 3; ++n) EXPECT_EQ(pos(n).F(0.0), 0.0);
}

TEST(F, PositiveAtFiveMatchesQuadrature) {
    EXPECT_NEAR(pos(1).F(5.0), 6.3829168431271060951, 1e-10);
}

TEST(F, NegativeIncrementsApproachIdentity) {
    for (int n = 1; n <= 3; ++n) {
        const double d = neg(n).F(-30.0) - neg(n).F(-40.0);
        EXPECT_NEAR(d, 10.0, 1e-9);
    }
}

TEST(F, StrictlyIncreasing) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-30, 30);
    for (int n = 1; n <= 3; ++n)
        for (int k = 0; k < 200; ++k) {
            double a = U(rng), b = U(rng);
            if (a > b) std::swap(a, b);
            if (b - a < 1e-6) continue;
            EXPECT_LT(neg(n).F(a), neg(n).F(b));
            EXPECT_LT(neg(n).F(a), 0.0);
            if (a > 0) {
                EXPECT_LT(pos(n).F(a), pos(n).F(b));
            }
        }
}

TEST(Phi1, KnownValues) {
    EXPECT_NEAR(neg(2).phi1(-10), -7.444987134938806537, 1e-9);
    EXPECT_NEAR(pos(1).phi1(-3), 1.7108803420275934987, 1e-10);
    EXPECT_NEAR(pos(1).phi1(-0.5), 0.061859607240322742912, 1e-11);
}

TEST(Phi1, PositiveVanishesAtZero) {
    for (int n = 1; n <= 3; ++n) {
        EXPECT_LT(pos(n).phi1(-1e-10), 1e-9);
        EXPECT_GT(pos(n).phi1(-1e-10), 0.0);
    }
}

TEST(Phi1, QuadraticLeadingTermAtOne) {
    double prev = 1;
    for (double t : {-1e-1, -1e-2, -1e-3}) {
        const double dev = std::abs(pos(1).phi1(t) / (c_n(1) * t * t) - 1);
        EXPECT_LT(dev, prev);
        prev = dev;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Phi1, FirstIntegralHoldsEverywhere) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-40, -1e-6);
    for (Sign s : {Sign::Negative, Sign::Positive})
        for (int n = 1; n <= 3; ++n) {
            const auto& p = profile(s, n);
            for (int k = 0; k < 300; ++k) {
                const double t = U(rng);
                const auto d = eval_phi1_derivatives(p, t);
                EXPECT_LE(p.first_integral_residual(d.phi1, d.phi1_prime), 1e-11) << to_string(s) << n << " t=" << t;
            }
        }
}

TEST(Phi1, MonotoneAndDivergent) {
    for (int n = 1; n <= 3; ++n) {
        const auto g = linspace(-30, -0.01, 200);
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            EXPECT_LT(neg(n).phi1(g[i]), neg(n).phi1(g[i + 1]));
            EXPECT_GT(pos(n).phi1(g[i]), pos(n).phi1(g[i + 1]));
        }
        EXPECT_LT(neg(n).phi1(-200), -150);
        EXPECT_GT(pos(n).phi1(-200), 150);
    }
}

TEST(Phi1, RejectsBadInput) {
    EXPECT_THROW(pos(1).phi1(0.0), DomainError);
    EXPECT_THROW(pos(1).phi1(1.0), DomainError);
    EXPECT_THROW(pos(1).phi1(std::nan("")), DomainError);
    EXPECT_THROW(PotentialProfile(Sign::Positive, 0), DomainError);
}

TEST(Derivatives, LimitsAtTheEnds) {
    for (int n = 1; n <= 3; ++n) {
        EXPECT_NEAR(neg(n).jet(-40).d1, 1.0, 1e-12);
        EXPECT_LT(std::abs(pos(n).jet(-1e-9).d1), 1e-2);
    }
}

TEST(Derivatives, SecondMatchesFiniteDifference) {
    const double h = 1e-4;
    for (Sign s : {Sign::Negative, Sign::Positive})
        for (int n = 1; n <= 3; ++n) {
            const auto& p = profile(s, n);
            for (double t : linspace(-15, -0.5, 40)) {
                const double fd = (p.jet(t + h).d1 - p.jet(t - h).d1) / (2 * h);
                const double d2 = p.jet(t).d2;
                EXPECT_NEAR(fd, d2, 1e-6 * std::max(1.0, d2)) << to_string(s) << n << " t=" << t;
            }
        }
}

TEST(Constants, ClosedForms) {
    EXPECT_DOUBLE_EQ(c_n(1), 0.25);
    EXPECT_DOUBLE_EQ(c_prime_n(1), 0.5);
    EXPECT_NEAR(c_prime_n(2), std::sqrt(2.0 / 3.0), 1e-15);
    for (int n = 1; n <= 3; ++n) {
        const auto r = constants(n);
        EXPECT_DOUBLE_EQ(r.a_n, std::exp(r.I_n) / (n + 1));
        EXPECT_NEAR(r.c_n, std::pow(n / (n + 1.0), (n + 1.0) / n), 1e-15);
    }
}

TEST(Constants, QuadratureAgainstReference) {
    for (int n = 1; n <= 3; ++n) {
        const auto r = constants(n);
        EXPECT_NEAR(r.I_n, I_ref[n - 1], 1e-12);
        EXPECT_NEAR(r.J_n, J_ref[n - 1], 1e-12);
        EXPECT_LT(r.I_error, 1e-8);
        EXPECT_LT(r.J_error, 1e-8);
    }
    EXPECT_NEAR(constants(1).I_n, 2 * std::log(2.0), 1e-13);
}

TEST(Expansions, RemainderSlopesAtMinusInfinity) {
    for (Sign s : {Sign::Negative, Sign::Positive}) {
        const auto e = expansion_residual(profile(s, 1), Regime::MinusInfinity,
                                          default_expansion_grid(s, Regime::MinusInfinity, 1));
        EXPECT_NEAR(e.fit.exponent, 2.0, 0.05);
    }
}

TEST(Expansions, RelativeRemainderNearZero) {
    for (int n = 1; n <= 3; ++n) {
        const auto e = expansion_residual(pos(n), Regime::ZeroMinus,
                                          default_expansion_grid(Sign::Positive, Regime::ZeroMinus, n));
        EXPECT_NEAR(e.fit.exponent, 1 + 1.0 / n, 0.1);
    }
}

TEST(Expansions, NegativeLogTermCoefficient) {
    for (int n = 1; n <= 3; ++n) EXPECT_NEAR(negative_zero_coefficient(neg(n)), -1.0 / (n + 2), 1e-4);
}

TEST(Scaled, IdentityAtBetaOne) {
    for (double t : {-5.0, -1.0, -0.1}) {
        EXPECT_EQ(ScaledPotential(neg(2), 1.0)(t), neg(2).phi1(t));
        EXPECT_EQ(ScaledPotential(pos(2), 1.0)(t), pos(2).phi1(t));
    }
}

TEST(Scaled, ShiftRelation) {
    const double b = 0.05;
    for (double t : {-50.0, -3.0, -0.2}) {
        EXPECT_NEAR(ScaledPotential(neg(2), b)(t), neg(2).phi1(b * t) + 3 * std::log(b), 1e-12);
        EXPECT_EQ(ScaledPotential(pos(2), b)(t), pos(2).phi1(b * t));
    }
}

TEST(Scaled, TianYauRescalingLimit) {
    for (int n = 1; n <= 2; ++n) {
        double prev = 1;
        for (double b : {1e-1, 1e-2, 1e-3}) {
            const ScaledPotential sp(pos(n), b);
            const double p = 1 + 1.0 / n, t = -2;
            const double dev = std::abs(std::pow(b, -p) * sp(t) / std::pow(-n * t / (n + 1), p) - 1);
            EXPECT_LT(dev, prev);
            prev = dev;
        }
        EXPECT_LT(prev, 0.02);
    }
}

TEST(Scaled, HyperbolicCuspLimit) {
    const int n = 2;
    const double t = -3;
    double prev = 1e9;
    for (double b : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double dev = std::abs(ScaledPotential(neg(n), b)(t) + (n + 1) * std::log(-t / (n + 1)));
        EXPECT_LT(dev, prev);
        prev = dev;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Scaled, RejectsBadBeta) {
    EXPECT_THROW(ScaledPotential(pos(1), 0.0), DomainError);
    EXPECT_THROW(ScaledPotential(pos(1), 1.5), DomainError);
}
