#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conelab/calabi_potential.hpp"
#include "conelab/collapse_geometry.hpp"
#include "conelab/cone_laplacian.hpp"
#include "conelab/glue_and_solve.hpp"
#include "conelab/model_metric.hpp"
#include "conelab/schauder.hpp"

namespace conelab {

struct CheckResult {
    int id = 0;
    std::string suite;
    bool pass = false;
    double metric = 0;     // the quantity compared against the tolerance
    double tolerance = 0;
    double seconds = 0;
    double budget = 0;     // runtime limit in seconds
    std::string detail;
};

struct Check {
    int id;
    std::string suite;
    double budget;
    std::function<void(CheckResult&)> body;
};

namespace detail {

class Notes {
public:
    template <class... A>
    Notes& add(const A&... a) {
        if (!first_) os_ << "; ";
        first_ = false;
        os_.precision(6);
        (os_ << ... << a);
        return *this;
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
    bool first_ = true;
};

inline double ratio_max(double a, double b) { return std::max(a, b); }

}  // namespace detail

// ---- 1: first integral ------------------------------------------------------
inline void check_ode(CheckResult& r) {
    double worst = 0;
    for (Sign s : {Sign::Negative, Sign::Positive})
        for (int n = 1; n <= 3; ++n) {
            const auto& p = profile(s, n);
            for (double t : linspace(-20, -1e-2, 1000)) {
                const double h = std::min(0.1, -t / 4);
                const double d1 = ridders_derivative([&](double x) { return eval_phi1(p, x); }, t, h);
                worst = std::max(worst, p.first_integral_residual(eval_phi1(p, t), d1));
            }
        }
    r.metric = worst;
    r.tolerance = 1e-9;
    r.pass = worst <= r.tolerance;
    r.detail = detail::Notes().add("sup residual over n=1..3, both signs, 1000 nodes on [-20,-0.01]").str();
}

// ---- 2: expansion exponents -------------------------------------------------
inline void check_expansions(CheckResult& r) {
    detail::Notes notes;
    double worst = 0;  // largest |slope - expected| / tolerance
    for (int n = 1; n <= 3; ++n) {
        for (Sign s : {Sign::Negative, Sign::Positive}) {
            const auto& p = profile(s, n);
            // n = 2: the e^{2t} term cancels, the remainder is O(e^{3t}) and underflows on the default grid
            if (n == 2) {
                const auto e = expansion_residual(p, Regime::MinusInfinity, linspace(-8.0, -3.0, 16));
                worst = std::max(worst, std::max(0.0, 2 - e.fit.exponent) / 0.05);
                notes.add(to_string(s), n, " -inf slope ", e.fit.exponent, " (>= 2)");
                continue;
            }
            const auto e = expansion_residual(p, Regime::MinusInfinity,
                                              default_expansion_grid(s, Regime::MinusInfinity, n));
            worst = std::max(worst, std::abs(e.fit.exponent - 2) / 0.05);
            notes.add(to_string(s), n, " -inf slope ", e.fit.exponent);
        }
        const auto& pp = profile(Sign::Positive, n);
        const auto z = expansion_residual(pp, Regime::ZeroMinus,
                                          default_expansion_grid(Sign::Positive, Regime::ZeroMinus, n));
        worst = std::max(worst, std::abs(z.fit.exponent - (1 + 1.0 / n)) / 0.1);
        std::vector<double> ug = logspace(1e-4, 1e-2, 16);
        for (auto& u : ug) u = -u;
        const auto d = derivative_expansion_fit(pp, ug);
        worst = std::max(worst, std::abs(d.exponent - (1 + 2.0 / n)) / 0.1);
        notes.add("pos", n, " 0- rel ", z.fit.exponent, " (", 1 + 1.0 / n, ") deriv ", d.exponent, " (",
                  1 + 2.0 / n, ")");
    }
    r.metric = worst;
    r.tolerance = 1;
    r.pass = worst <= 1;
    r.detail = "metric = worst |slope - expected| / tol; " + notes.str();
}

// ---- 3: Tian-Yau limit ------------------------------------------------------
inline void check_tianyau_limit(CheckResult& r) {
    const double beta = 1e-3;
    double worst = 0;
    for (int n = 1; n <= 2; ++n) {
        ScaledPotential sp(profile(Sign::Positive, n), beta);
        const double p = 1 + 1.0 / n;
        for (double t : linspace(-5, -0.1, 400)) {
            const double v = std::pow(beta, -p) * sp(t) / std::pow(-n * t / (n + 1), p);
            worst = std::max(worst, std::abs(v - 1));
        }
    }
    r.metric = worst;
    r.tolerance = 0.02;
    r.pass = worst < r.tolerance;
    r.detail = "sup |beta^{-1-1/n} phi_beta / TY - 1| on [-5,-0.1], beta = 1e-3, n = 1, 2";
}

// ---- 4: curvature -----------------------------------------------------------
inline void check_curvature(CheckResult& r) {
    const std::vector<double> betas = {0.2, 0.1, 0.05, 0.02};
    detail::Notes notes;
    bool ok = true;
    double disagreement = 0;
    for (int n = 1; n <= 3; ++n) {
        const auto neg = curvature_scan(profile(Sign::Negative, n), betas, linspace(-30, -0.01, 300));
        bool same = true;
        for (double m : neg.per_beta_max) same = same && m == neg.per_beta_max[0];
        ok = ok && same && std::isfinite(neg.max_q);
        disagreement = std::max(disagreement, neg.max_disagreement);
        std::vector<double> ug = logspace(1e-8, 30, 300);
        for (auto& u : ug) u = -u;
        const auto pos = curvature_scan(profile(Sign::Positive, n), betas, ug);
        ok = ok && std::isfinite(pos.C);
        disagreement = std::max(disagreement, pos.max_disagreement);
        notes.add("n=", n, " neg max ", neg.max_q, (same ? " identical" : " DIFFERS"), " pos C ", pos.C);
    }
    r.metric = disagreement;
    r.tolerance = 1e-8;
    r.pass = ok && disagreement <= r.tolerance;
    r.detail = "metric = max disagreement of the two routes; " + notes.str();
}

// ---- 5: zones ---------------------------------------------------------------
inline void check_zones(CheckResult& r) {
    const std::vector<double> betas = {0.1, 0.05, 0.02, 0.01};
    double dev = 0, kvar = 0;
    detail::Notes notes;
    for (int n = 1; n <= 2; ++n) {
        std::vector<double> Ks;
        for (double b : betas) {
            dev = std::max(dev, cusp_zone_comparison(n, b, Zone::BetaTtoZero, {-1e-3 / b}).max_deviation);
            dev = std::max(dev, cusp_zone_comparison(n, b, Zone::BetaTtoMinusInfinity, {-30 / b}).max_deviation);
            Ks.push_back(cusp_zone_comparison(n, b, Zone::Middle, {-1 / b}).K);
        }
        const auto [lo, hi] = std::minmax_element(Ks.begin(), Ks.end());
        kvar = std::max(kvar, (*hi - *lo) / *lo);
        notes.add("n=", n, " K ", *hi);
    }
    r.metric = dev;
    r.tolerance = 0.01;
    r.pass = dev < 0.01 && kvar < 0.2;
    r.detail = detail::Notes().add("max |ratio-1| on the two outer zones; K variation ", kvar, " (< 0.2)").str() + "; " +
               notes.str();
}

// ---- 6: collapse ------------------------------------------------------------
inline void check_collapse(CheckResult& r) {
    double len = 0, cdf = 0, vol = 0, expo = 0;
    const double ninf = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= 3; ++n) {
        const auto& p = profile(Sign::Positive, n);
        len = std::max(len, std::abs(radial_length(p, ninf, 0.0) - interval_length(n)));
        CollapseProfile cp(p, 0.1, 1.0);
        for (const auto& row : limit_measure_pushforward(cp, linspace(0, pi / 2, 41))) cdf = std::max(cdf, row.error);
        for (double b : {0.2, 0.1, 0.05}) {
            const auto v = model_volume(CollapseProfile(p, b, 2.0));
            vol = std::max(vol, std::abs(v.quadrature - v.closed_form) / v.closed_form);
        }
        expo = std::max(expo, std::abs(volume_exponent_fit(n, {0.2, 0.1, 0.05, 0.02}).exponent - n));
    }
    r.metric = len;
    r.tolerance = 1e-8;
    r.pass = len < 1e-8 && cdf < 1e-6 && expo < 0.01 && vol < 1e-8;
    r.detail = detail::Notes()
                   .add("length err ", len)
                   .add("cdf err ", cdf, " (< 1e-6)")
                   .add("volume exponent err ", expo, " (< 0.01)")
                   .add("volume rel err ", vol, " (< 1e-8)")
                   .str();
}

// ---- 7: gluing scalings -----------------------------------------------------
inline void check_gluing(CheckResult& r) {
    const auto s = residual_scaling_scan(2, 0.8, {0.1, 0.05, 0.02});
    double worst = 0;
    detail::Notes notes;
    for (int j = 0; j < 3; ++j) {
        worst = std::max(worst, std::abs(s.difference_fit[j].exponent - s.expected_difference[j]));
        worst = std::max(worst, std::abs(s.residual_fit[j].exponent - s.expected_residual[j]));
        notes.add("j=", j, " diff ", s.difference_fit[j].exponent, " (", s.expected_difference[j], ") res ",
                  s.residual_fit[j].exponent, " (", s.expected_residual[j], ")");
    }
    r.metric = worst;
    r.tolerance = 0.1;
    r.pass = worst <= 0.1;
    r.detail = notes.str();
}

// ---- 8: Newton --------------------------------------------------------------
inline void check_newton(CheckResult& r) {
    const std::vector<double> mus = {0.5, 0.7, 0.8, 0.9};
    bool ok = true, monotone = true;
    double err = 0, res = 0, prev = std::numeric_limits<double>::infinity();
    detail::Notes notes;
    for (double mu : mus) {
        const auto s = newton_solve_radial(GlueConfig(2, 0.1, mu));
        ok = ok && s.converged && s.quadratic_tail;
        err = std::max(err, s.max_error_vs_exact);
        res = std::max(res, s.final_residual);
        monotone = monotone && s.correction_norm < prev;
        prev = s.correction_norm;
        notes.add("mu=", mu, " it ", s.iterations, " order ", s.terminal_order, " corr ", s.correction_norm);
    }
    r.metric = err;
    r.tolerance = 1e-8;
    r.pass = ok && monotone && res < 1e-10 && err < 1e-8;
    r.detail = detail::Notes().add("final residual ", res, (monotone ? " monotone" : " NOT monotone")).str() + "; " +
               notes.str();
}

// ---- 9: kernel --------------------------------------------------------------
inline void check_kernel(CheckResult& r) {
    double order = 10, slope = 0;
    bool sign_ok = true;
    detail::Notes notes;
    for (int n = 1; n <= 3; ++n) {
        const auto k = kernel_solutions(profile(Sign::Positive, n));
        order = std::min(order, k.order_first);
        slope = std::max(slope, std::abs(k.slope_minus_infinity - 1));
        sign_ok = sign_ok && k.orthogonality != 0 &&
                  std::signbit(k.orthogonality) == std::signbit(k.orthogonality_expected);
        notes.add("n=", n, " order ", k.order_first, " slope ", k.slope_minus_infinity, " integral ", k.orthogonality);
    }
    r.metric = slope;
    r.tolerance = 0.05;
    r.pass = slope <= 0.05 && order >= 1.8 && sign_ok;
    r.detail = "metric = |slope - 1|; grid order >= 1.8; " + notes.str();
}

// ---- 10: mode decay ---------------------------------------------------------
inline void check_mode_decay(CheckResult& r) {
    const auto& p = profile(Sign::Positive, 2);
    const std::vector<double> betas = {0.1, 0.05};
    const std::vector<int> ells = {1, 2, 4};
    std::vector<std::vector<ModeDecayReport>> t;
    double C = 0, drop = std::numeric_limits<double>::infinity(), bdrop = drop;
    for (double b : betas) {
        t.emplace_back();
        for (int l : ells) {
            t.back().push_back(mode_decay_check(p, b, l, -1.0));
            C = std::max(C, t.back().back().ratio);
        }
    }
    for (auto& row : t)
        for (std::size_t i = 0; i + 1 < row.size(); ++i) drop = std::min(drop, row[i].sup_half / row[i + 1].sup_half);
    for (std::size_t j = 0; j < ells.size(); ++j) bdrop = std::min(bdrop, t[0][j].sup_half / t[1][j].sup_half);
    r.metric = drop;
    r.tolerance = 4;
    r.pass = std::isfinite(C) && drop >= 4 && bdrop >= 2;
    r.detail = detail::Notes()
                   .add("C = max sup/(beta/l^2) = ", C)
                   .add("min l-doubling drop ", drop, " (>= 4)")
                   .add("min beta-halving drop ", bdrop, " (>= 2)")
                   .str();
}

// ---- 11: cone Poisson solvers ------------------------------------------------

// Seeded smooth data: f = c0 + c1 r^2 + e exp(r cos(theta - ph)) + sum_{k=1}^3 r^k (a_k cos + b_k sin),
// boundary data a trigonometric polynomial of degree 4.
struct PoissonProblem {
    double beta;
    double c0, c1, e, ph;
    std::array<double, 4> a, b;
    std::array<double, 5> ga, gb;

    double f(double r, double t) const {
        double s = c0 + c1 * r * r + e * std::exp(r * std::cos(t - ph));
        for (int k = 1; k < 4; ++k) s += std::pow(r, k) * (a[k] * std::cos(k * t) + b[k] * std::sin(k * t));
        return s;
    }
    double g(double t) const {
        double s = ga[0];
        for (int k = 1; k < 5; ++k) s += ga[k] * std::cos(k * t) + gb[k] * std::sin(k * t);
        return s;
    }
};

inline std::vector<PoissonProblem> poisson_corpus(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<PoissonProblem> out;
    for (int i = 0; i < count; ++i) {
        PoissonProblem p{};
        p.beta = 0.02 + 0.43 * U(rng);
        p.c0 = N(rng);
        p.c1 = N(rng);
        p.e = N(rng);
        p.ph = 2 * pi * U(rng);
        for (int k = 0; k < 4; ++k) {
            p.a[k] = N(rng);
            p.b[k] = N(rng);
        }
        for (int k = 0; k < 5; ++k) {
            p.ga[k] = N(rng);
            p.gb[k] = N(rng);
        }
        out.push_back(p);
    }
    return out;
}

struct PoissonCheck {
    double solver_gap = 0;       // mode vs Green on the corpus
    double r2_residual = 0;      // |Delta_h r^2 - 4|
    double harmonic_order = 0;   // min observed order of the FD residual
    double max_principle = 0;    // largest positive value of u for f >= 0, zero boundary
    int problems = 0, points = 0;
};

inline PoissonCheck poisson_check(int problems = 20, std::uint64_t seed = 2024) {
    PoissonCheck c;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const auto& pr : poisson_corpus(problems, seed)) {
        ConeDisk d(pr.beta);
        auto f = [&](double r, double t) { return pr.f(r, t); };
        auto g = [&](double t) { return pr.g(t); };
        const auto u = poisson_solve_modes(d, f, g);
        for (int q = 0; q < 5; ++q) {
            const double r = 0.45 * U(rng), t = 2 * pi * U(rng);
            c.solver_gap = std::max(c.solver_gap, std::abs(green_representation(d, f, g, r, t).value - u.value(r, t)));
            ++c.points;
        }
        ++c.problems;
    }
    c.harmonic_order = std::numeric_limits<double>::infinity();
    for (double beta : {0.25, 0.2, 0.125}) {
        ConeDisk d(beta);
        for (int k : {1}) {
            std::array<double, 2> res{};
            for (int lvl = 0; lvl < 2; ++lvl) {
                const int N = 160 << lvl;
                const auto G = make_polar_grid(d, N, 2 * N);
                auto h = [&](double r, double t) { return std::pow(r / d.R, k / beta) * std::cos(k * t); };
                const auto L = laplacian_apply(G, sample(G, h));
                const auto L2 = laplacian_apply(G, sample(G, [](double r, double) { return r * r; }));
                for (std::size_t i = 0; i + 1 < G.r.size(); ++i)
                    for (int j = 0; j < G.M; ++j) {
                        res[lvl] = std::max(res[lvl], std::abs(L[G.index(i, j)]));
                        c.r2_residual = std::max(c.r2_residual, std::abs(L2[G.index(i, j)] - 4));
                    }
            }
            c.harmonic_order = std::min(c.harmonic_order, std::log2(res[0] / res[1]));
        }
    }
    // maximum principle, f >= 0 and zero boundary
    for (double beta : {0.45, 0.1, 0.02}) {
        ConeDisk d(beta);
        auto f = [](double r, double t) { return 1 + r * std::cos(t) + std::pow(r * std::sin(2 * t), 2); };
        auto zero = [](double) { return 0.0; };
        const auto u = poisson_solve_modes(d, f, zero);
        for (double r : linspace(0, d.R, 26))
            for (int j = 0; j < 16; ++j) {
                const double t = 2 * pi * j / 16;
                c.max_principle = std::max(c.max_principle, u.value(r, t));
                if (j % 4 == 0 && r < d.R)
                    c.max_principle = std::max(c.max_principle, green_representation(d, f, zero, r, t).value);
            }
    }
    return c;
}

inline void check_poisson(CheckResult& r) {
    const auto c = poisson_check();
    r.metric = c.solver_gap;
    r.tolerance = 1e-6;
    r.pass = c.solver_gap < 1e-6 && c.r2_residual < 1e-8 && c.harmonic_order >= 1.8 && c.max_principle <= 0;
    r.detail = detail::Notes()
                   .add("mode vs Green over ", c.problems, " problems / ", c.points, " points")
                   .add("|Delta_h r^2 - 4| ", c.r2_residual)
                   .add("harmonic FD order ", c.harmonic_order, " (>= 1.8)")
                   .add("max u for f >= 0 ", c.max_principle, " (<= 0)")
                   .str();
}

// ---- 12: Schauder uniformity -------------------------------------------------
inline void check_schauder(CheckResult& r) {
    const std::vector<double> betas = {0.45, 0.25, 0.1, 0.05, 0.02};
    const auto corpus = schauder_corpus(0.5, 8, 7);
    const auto rep = schauder_probe(betas, 0.5, corpus);
    detail::Notes notes;
    for (const auto& row : rep.rows)
        notes.add("beta ", row.beta, " D ", row.max_donaldson, " F ", row.max_full, " MZ ", row.max_mean_zero);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& row : rep.rows)
        if (row.beta <= 0.25) {
            lo = std::min(lo, row.max_full);
            hi = std::max(hi, row.max_full);
        }
    r.metric = std::max({rep.variation_donaldson, rep.variation_full, rep.variation_mean_zero});
    r.tolerance = rep.threshold;
    r.pass = rep.uniform() && rep.mean_zero_stable();
    r.detail = detail::Notes()
                   .add("variation D ", rep.variation_donaldson, " F ", rep.variation_full, " (F on beta <= 1/4: ",
                        hi / lo, ") mean-zero ", rep.variation_mean_zero)
                   .str() +
               "; " + notes.str();
}

inline const std::vector<Check>& acceptance_checks() {
    static const std::vector<Check> checks = {
        {1, "ode", 5, check_ode},
        {2, "expansions", 30, check_expansions},
        {3, "tianyau_limit", 10, check_tianyau_limit},
        {4, "curvature", 10, check_curvature},
        {5, "zones", 20, check_zones},
        {6, "collapse", 30, check_collapse},
        {7, "gluing", 60, check_gluing},
        {8, "newton", 60, check_newton},
        {9, "kernel", 10, check_kernel},
        {10, "mode_decay", 60, check_mode_decay},
        {11, "poisson", 120, check_poisson},
        {12, "schauder", 600, check_schauder},
    };
    return checks;
}

inline std::vector<std::string> suite_names() {
    std::vector<std::string> v;
    for (const auto& c : acceptance_checks()) v.push_back(c.suite);
    return v;
}

// Runs one check; exceptions count as failures.
inline CheckResult run_check(const Check& c) {
    CheckResult r;
    r.id = c.id;
    r.suite = c.suite;
    r.budget = c.budget;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        c.body(r);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > r.budget) {
        r.pass = false;
        r.detail += detail::cat("; runtime ", r.seconds, " s over budget ", r.budget, " s");
    }
    return r;
}

inline std::vector<CheckResult> run_suite(const std::string& name) {
    std::vector<CheckResult> out;
    for (const auto& c : acceptance_checks())
        if (name == "all" || c.suite == name) out.push_back(run_check(c));
    if (out.empty()) throw DomainError("unknown suite: " + name);
    return out;
}

}  // namespace conelab
