#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "conelab/cone_laplacian.hpp"
#include "conelab/verify.hpp"

using namespace conelab;

namespace {

auto zero_g = [](double) { return 0.0; };

// r^a, radial
struct Power {
    double a, beta;
    ConeJet jet(double r, double) const {
        ConeJet J;
        J.value = std::pow(r, a);
        J.grad[0] = a * std::pow(r, a - 1);
        J.hess[0] = a * (a - 1) * std::pow(r, a - 2);
        J.hess[2] = a * std::pow(r, a - 2);
        return J;
    }
    double value(double r, double) const { return std::pow(r, a); }
};

}  // namespace

TEST(Distance, MatchesDevelopment) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0, 1);
    for (double beta : {0.45, 0.2, 0.05})
        for (int k = 0; k < 200; ++k) {
            const double r1 = U(rng), r2 = U(rng), t1 = 2 * pi * U(rng), t2 = 2 * pi * U(rng);
            double d = std::remainder(t2 - t1, 2 * pi);
            const std::complex<double> a = std::polar(r1, 0.0), b = std::polar(r2, beta * d);
            EXPECT_NEAR(cone_distance(beta, r1, t1, r2, t2), std::abs(a - b), 1e-14);
        }
}

TEST(Distance, TriangleInequality) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0, 1);
    const double beta = 0.1;
    for (int k = 0; k < 500; ++k) {
        double p[3][2];
        for (auto& q : p) q[0] = U(rng), q[1] = 2 * pi * U(rng);
        const double ab = cone_distance(beta, p[0][0], p[0][1], p[1][0], p[1][1]);
        const double bc = cone_distance(beta, p[1][0], p[1][1], p[2][0], p[2][1]);
        const double ac = cone_distance(beta, p[0][0], p[0][1], p[2][0], p[2][1]);
        EXPECT_LE(ac, ab + bc + 1e-14);
    }
}

TEST(Exact, RadialParticular) {
    const ConeDisk d(0.2);
    const ExactModalSolution u(d, TrigRadialData{{{0, 0.0, 1.0, 0.0}}});
    for (double r : {0.0, 0.1, 0.3, 0.5}) {
        EXPECT_NEAR(u.value(r, 1.0), (r * r - d.R * d.R) / 4, 1e-15);
        if (r > 0) {
            EXPECT_NEAR(u.jet(r, 0.3).laplacian(), 1.0, 1e-12);
        }
    }
}

TEST(Exact, HarmonicExtension) {
    const ConeDisk d(0.25);
    const ExactModalSolution u(d, {}, {{1, 1.0, 0.0}});
    for (double r : {0.05, 0.2, 0.45})
        for (double t : {0.0, 1.0, 4.0}) EXPECT_NEAR(u.value(r, t), std::pow(r / d.R, 4) * std::cos(t), 1e-14);
}

TEST(Jet, QuadraticIsFlat) {
    // r^2: Hessian is twice the identity in the orthonormal frame
    const auto J = Power{2, 0.2}.jet(0.3, 0.0);
    EXPECT_NEAR(J.hess[0], 2, 1e-14);
    EXPECT_NEAR(J.hess[2], 2, 1e-14);
    EXPECT_NEAR(J.laplacian(), 4, 1e-14);
}

TEST(ModeSolver, RadialParticular) {
    const ConeDisk d(0.3);
    const auto u = poisson_solve_modes(d, [](double, double) { return 1.0; }, zero_g);
    for (double r : {0.0, 1e-6, 0.1, 0.25, 0.49}) {
        EXPECT_NEAR(u.value(r, 2.0), (r * r - d.R * d.R) / 4, 1e-9);
        EXPECT_NEAR(u.jet(r, 2.0).grad[0], r / 2, 1e-9);
    }
}

TEST(ModeSolver, HarmonicExtension) {
    const ConeDisk d(0.2);
    const auto u = poisson_solve_modes(d, [](double, double) { return 0.0; }, [](double t) { return std::cos(t); });
    for (double r : {0.1, 0.3, 0.45})
        EXPECT_NEAR(u.value(r, 0.7), std::pow(r / d.R, 5) * std::cos(0.7), 1e-10);
}

TEST(ModeSolver, MatchesExactModalSolution) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> N;
    for (double beta : {0.45, 0.2, 0.05}) {
        const ConeDisk d(beta);
        TrigRadialData f{{{0, 0.0, N(rng), 0}, {0, 1.5, N(rng), 0}, {1, 1.0, N(rng), N(rng)}, {3, 2.5, N(rng), N(rng)}}};
        const std::vector<TrigTerm> g = {{0, N(rng), 0}, {2, N(rng), N(rng)}};
        const ExactModalSolution ex(d, f, g);
        const auto u = poisson_solve_modes(d, f, [&](double t) {
            double s = 0;
            for (const auto& m : g) s += m.a * std::cos(m.k * t) + m.b * std::sin(m.k * t);
            return s;
        });
        for (double r : {1e-3, 0.1, 0.3, 0.48})
            for (double t : {0.2, 3.0}) {
                const auto a = ex.jet(r, t), b = u.jet(r, t);
                EXPECT_NEAR(a.value, b.value, 1e-8);
                EXPECT_NEAR(a.grad[0], b.grad[0], 1e-7);
                EXPECT_NEAR(a.grad[1], b.grad[1], 1e-7);
                EXPECT_NEAR(b.laplacian(), f(r, t), 1e-5 * std::max(1.0, std::abs(f(r, t))));
            }
    }
}

TEST(ModeSolver, TruncationDetected) {
    const ConeDisk d(0.25);
    ModeSolveOptions o;
    o.angular_nodes = 64;
    auto f = [](double r, double t) { return r * std::abs(std::sin(7 * t)); };
    EXPECT_THROW(poisson_solve_modes(d, f, zero_g, o), std::exception);
}

TEST(Green, MeanValue) {
    const ConeDisk d(0.2);
    auto zero = [](double, double) { return 0.0; };
    EXPECT_NEAR(green_representation(d, zero, [](double) { return 2.5; }, 0.3, 1.0).value, 2.5, 1e-12);
}

TEST(Green, CentreOfConstantSource) {
    const ConeDisk d(0.15);
    const auto v = green_representation(d, [](double, double) { return 1.0; }, zero_g, 0.0, 0.0);
    EXPECT_NEAR(v.value, -d.R * d.R / 4, 1e-10);
    const auto u = poisson_solve_modes(d, [](double, double) { return 1.0; }, zero_g);
    EXPECT_NEAR(v.value, u.value(0, 0), 1e-10);
}

TEST(Green, SignOfKernel) {
    const ConeDisk d(0.3);
    auto f = [](double r, double t) { return 1 + r * std::cos(t) * std::cos(t); };
    for (double r : {0.0, 0.2, 0.4})
        for (double t : {0.0, 2.0}) EXPECT_LE(green_representation(d, f, zero_g, r, t).value, 0.0);
}

TEST(Green, AgreesWithModeSolverOnCorpus) {
    const auto c = poisson_check(20, 2024);
    EXPECT_LT(c.solver_gap, 1e-6);
    EXPECT_EQ(c.problems, 20);
    EXPECT_LE(c.max_principle, 0.0);
}

TEST(FiniteDifference, QuadraticGivesFour) {
    for (double beta : {0.45, 0.25, 0.1}) {
        const auto G = make_polar_grid(ConeDisk(beta), 40, 64);
        const auto L = laplacian_apply(G, sample(G, [](double r, double) { return r * r; }));
        for (std::size_t i = 0; i + 1 < G.r.size(); ++i)
            for (int j = 0; j < G.M; ++j) EXPECT_NEAR(L[G.index(i, j)], 4.0, 1e-9);
    }
}

TEST(FiniteDifference, SecondOrderOnHarmonicAndManufactured) {
    const double beta = 0.25;
    const ConeDisk d(beta);
    auto harm = [&](double r, double t) { return std::pow(r / d.R, 1 / beta) * std::cos(t); };
    auto man = [](double r, double t) { return std::pow(r, 4) * std::cos(t); };
    auto man_lap = [&](double r, double t) { return (16 - 1 / (beta * beta)) * r * r * std::cos(t); };
    std::array<double, 2> eh{}, em{};
    for (int lvl = 0; lvl < 2; ++lvl) {
        const int N = 160 << lvl;
        const auto G = make_polar_grid(d, N, 2 * N);
        const auto Lh = laplacian_apply(G, sample(G, harm));
        const auto Lm = laplacian_apply(G, sample(G, man));
        for (std::size_t i = 0; i + 1 < G.r.size(); ++i)
            for (int j = 0; j < G.M; ++j) {
                eh[lvl] = std::max(eh[lvl], std::abs(Lh[G.index(i, j)]));
                em[lvl] = std::max(em[lvl], std::abs(Lm[G.index(i, j)] - man_lap(G.r[i], G.theta(j))));
            }
    }
    EXPECT_GT(std::log2(eh[0] / eh[1]), 1.8);
    EXPECT_GT(std::log2(em[0] / em[1]), 1.8);
}

TEST(FiniteDifference, GridPreconditions) {
    EXPECT_THROW(make_polar_grid(ConeDisk(0.2), 40, 32), DomainError);
    EXPECT_THROW(make_polar_grid(ConeDisk(0.2), 2, 64), DomainError);
    EXPECT_THROW(ConeDisk(0.5), DomainError);
    EXPECT_THROW(ConeDisk(0.0), DomainError);
}

TEST(Cylinder, PowerGradient) {
    const double a = 2.7, r = 0.2;
    const Power p{a, 0.2};
    EXPECT_NEAR(r * p.jet(r, 0).grad[0], a * p.value(r, 0), 1e-14);
}

TEST(Cylinder, ConformalBookkeeping) {
    const ConeDisk d(0.2);
    const TrigRadialData f{{{0, 0.0, 1.0, 0}, {1, 1.0, 0.5, -0.3}, {2, 2.0, 0.2, 0.1}}};
    const ExactModalSolution u(d, f, {{1, 0.3, 0.0}});
    const auto rep = cylinder_transform(d, u, [&](double r, double t) { return f(r, t); }, -5.0);
    EXPECT_LT(rep.gradient_identity, 1e-14);
    for (double q : rep.norm_ratio) {
        EXPECT_LE(q, rep.bound);
        EXPECT_GE(q, 1 / rep.bound);
    }
    EXPECT_LT(rep.laplacian_defect_fine, rep.laplacian_defect);
    EXPECT_NEAR(std::log2(rep.laplacian_defect / rep.laplacian_defect_fine), 2.0, 0.3);
}

TEST(Cylinder, WindowInsideDisk) {
    const ConeDisk d(0.2);
    const ExactModalSolution u(d, TrigRadialData{{{0, 0.0, 1.0, 0}}});
    EXPECT_THROW(cylinder_transform(d, u, [](double, double) { return 1.0; }, -1.0), DomainError);
}
