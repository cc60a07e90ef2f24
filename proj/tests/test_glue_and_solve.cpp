#include <gtest/gtest.h>

#include "conelab/glue_and_solve.hpp"

using namespace conelab;

namespace {
const PotentialProfile& pos(int n) { return profile(Sign::Positive, n); }
}  // namespace

TEST(Glue, BranchesAreExact) {
    const GlueConfig gc(2, 0.1, 0.8);
    const double tb = gc.t_beta();
    const ScaledPotential sp(pos(2), 0.1);
    for (double t : {4 * tb, 2 * tb, 2.5 * tb}) EXPECT_EQ(glued_potential(gc, t), sp(t));
    for (double t : {tb / 2, tb / 4, -1e-3}) {
        const double ty = std::pow(0.1, 1.5) * std::pow(-2 * t / 3, 1.5);
        EXPECT_NEAR(glued_potential(gc, t), ty, 1e-15);
    }
}

TEST(Glue, MidpointBetweenBranches) {
    for (double mu : {0.5, 0.8}) {
        const GlueConfig gc(2, 0.05, mu);
        const double t = gc.t_beta();
        const auto g = glue_jet(gc, t);
        EXPECT_GE(g.glued[0], std::min(g.calabi[0], g.ty[0]));
        EXPECT_LE(g.glued[0], std::max(g.calabi[0], g.ty[0]));
    }
}

TEST(Glue, CutoffMonotone) {
    double prev = -1;
    for (double v : linspace(0, 3, 301)) {
        const double c = Cutoff::eval(v);
        EXPECT_GE(c, prev);
        prev = c;
    }
    EXPECT_EQ(Cutoff::eval(0.5), 0.0);
    EXPECT_EQ(Cutoff::eval(2.0), 1.0);
}

TEST(Residual, VanishesOnCalabiSide) {
    const auto z = zone_sups(GlueConfig(2, 0.1, 0.8));
    EXPECT_LT(z.calabi_zone_residual, 1e-11);
}

TEST(Residual, PurePotentialOnTianYauSide) {
    for (int n = 1; n <= 3; ++n) {
        const auto z = zone_sups(GlueConfig(n, 0.05, 0.8));
        EXPECT_LT(z.ty_zone_defect, 1e-12);
    }
}

TEST(Residual, TianYauLogTermIsConstant) {
    // (-phi')^{n-1} phi'' of the Tian-Yau branch is t-free
    for (int n = 1; n <= 3; ++n) {
        const auto a = ty_jet(n, 0.1, -0.5), b = ty_jet(n, 0.1, -7.0);
        EXPECT_NEAR(std::pow(-a[1], n - 1) * a[2], std::pow(-b[1], n - 1) * b[2], 1e-14);
    }
}

TEST(Residual, ScalingExponents) {
    const auto s = residual_scaling_scan(2, 0.8, {0.1, 0.05, 0.02});
    for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(s.difference_fit[j].exponent, s.expected_difference[j], 0.1) << j;
        EXPECT_NEAR(s.residual_fit[j].exponent, s.expected_residual[j], 0.1) << j;
    }
    EXPECT_NEAR(s.residual_fit[0].exponent, 1.5, 0.05);
    EXPECT_NEAR(s.difference_fit[0].exponent, 3.0, 0.1);
    EXPECT_NEAR(s.difference_fit[2].exponent, 1.5, 0.1);
}

TEST(Residual, CutoffDerivativeScaling) {
    const auto s = residual_scaling_scan(2, 0.8, {0.1, 0.05, 0.02});
    for (int j = 1; j < 3; ++j) EXPECT_NEAR(s.cutoff_fit[j].exponent, s.expected_cutoff[j], 0.1);
}

TEST(Weight, Shape) {
    const double b = 0.05;
    EXPECT_EQ(weight(b, -5.0), 1.0);
    EXPECT_EQ(weight(b, -0.3), 0.3);
    EXPECT_EQ(weight(b, -0.01), b);
    for (double u : linspace(-4, -1e-3, 100)) EXPECT_GE(weight(b, u), b);
}

TEST(ModeOperator, KernelOfLimitOperator) {
    const auto& p = pos(2);
    for (double u : {-6.0, -1.0, -0.1}) {
        const auto j = p.jet(u);
        EXPECT_NEAR(mode_operator_exact(p, 0.1, 0, u, j.d1, j.d2, j.d3), -2 * j.d1, 1e-12);
    }
}

TEST(ModeOperator, ConstantsHarmonic) {
    const auto& p = pos(2);
    const auto g = graded_grid(p, -6, -0.1, 201);
    const auto r = mode_operator_apply(p, 0.1, 0, RadialField(Variable::u, g, std::vector<double>(g.size(), 1.0)));
    for (double v : r.values) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(ModeOperator, ManufacturedSecondOrder) {
    const auto& p = pos(2);
    const double beta = 0.5;
    const int ell = 2;
    auto F = [](double u) { return std::exp(-(u + 2) * (u + 2)); };
    auto F1 = [&](double u) { return -2 * (u + 2) * F(u); };
    auto F2 = [&](double u) { return (4 * (u + 2) * (u + 2) - 2) * F(u); };
    std::array<double, 2> err{};
    for (int lvl = 0; lvl < 2; ++lvl) {
        const auto g = linspace(-5, -0.5, 400 << lvl);
        std::vector<double> v;
        for (double u : g) v.push_back(F(u));
        const auto r = mode_operator_apply(p, beta, ell, RadialField(Variable::u, g, v));
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double u = r.grid[i];
            err[lvl] = std::max(err[lvl], std::abs(r.values[i] - mode_operator_exact(p, beta, ell, u, F(u), F1(u), F2(u))));
        }
    }
    EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.2);
}

TEST(ModeOperator, RejectsCoarseGrid) {
    const auto g = linspace(-5, -0.5, 20);
    EXPECT_THROW(mode_operator_apply(pos(2), 0.1, 4, RadialField(Variable::u, g, std::vector<double>(20, 0.0))),
                 DomainError);
}

TEST(Kernel, Solutions) {
    for (int n = 1; n <= 3; ++n) {
        const auto k = kernel_solutions(pos(n));
        EXPECT_GE(k.order_first, 1.8);
        EXPECT_NEAR(k.slope_minus_infinity, 1.0, 0.05);
        EXPECT_NEAR(k.orthogonality, (n % 2 ? -1.0 : 1.0) / (n + 1), 1e-10);
        EXPECT_LT(k.residual_first_fine, k.residual_first);
    }
}

TEST(ModeDecay, InverseSquareLaw) {
    const auto& p = pos(2);
    std::vector<double> sup;
    for (int ell : {1, 2, 4}) sup.push_back(mode_decay_check(p, 0.1, ell, -1.0).sup_half);
    EXPECT_GE(sup[0] / sup[1], 4.0);
    EXPECT_GE(sup[1] / sup[2], 4.0);
    const double half = mode_decay_check(p, 0.05, 2, -1.0).sup_half;
    EXPECT_GE(sup[1] / half, 2.0);
}

TEST(Newton, ExactStartNeedsNoIterations) {
    NewtonOptions o;
    o.initial = InitialGuess::Exact;
    const auto r = newton_solve_radial(GlueConfig(2, 0.1, 0.8), o);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
}

TEST(Newton, ConvergesFromGluedGuess) {
    const auto r = newton_solve_radial(GlueConfig(2, 0.1, 0.8));
    EXPECT_TRUE(r.converged);
    EXPECT_LT(r.final_residual, 1e-10);
    EXPECT_LT(r.max_error_vs_exact, 1e-8);
    EXPECT_TRUE(r.quadratic_tail);
    // independent check against the scaled potential on the solver's own nodes
    const ScaledPotential sp(pos(2), 0.1);
    double worst = 0;
    for (std::size_t i = 0; i < r.u.size(); ++i) worst = std::max(worst, std::abs(r.phi[i] - sp(r.u[i] / 0.1)));
    EXPECT_LT(worst, 1e-8);
}

TEST(Newton, CorrectionShrinksWithMu) {
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {0.5, 0.7, 0.9}) {
        const auto r = newton_solve_radial(GlueConfig(2, 0.1, mu));
        EXPECT_LT(r.correction_norm, prev);
        prev = r.correction_norm;
    }
}

TEST(Errors, Preconditions) {
    EXPECT_THROW(GlueConfig(2, 0.1, 1.0), DomainError);
    EXPECT_THROW(GlueConfig(2, 1.0, 0.8), DomainError);
    EXPECT_THROW(GlueConfig(0, 0.1, 0.8), DomainError);
    EXPECT_THROW(residual_scaling_scan(2, 0.8, {0.1, 0.05}), DomainError);
    EXPECT_THROW(mode_decay_check(pos(2), 0.1, 0, -1.0), DomainError);
}
