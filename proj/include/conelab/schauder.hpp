#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "conelab/cone_laplacian.hpp"
#include "conelab/fit.hpp"

namespace conelab {

enum class NormKind { Donaldson2alpha, Full2alpha, Calpha };

inline const char* to_string(NormKind k) {
    switch (k) {
        case NormKind::Donaldson2alpha: return "donaldson";
        case NormKind::Full2alpha: return "full";
        case NormKind::Calpha: return "calpha";
    }
    throw DomainError("unknown norm kind");
}

struct SamplingBudget {
    int random_pairs = 20000;
    int radial_levels = 40;   // geometric radii down to r_floor
    double r_floor = 1e-4;    // relative to the sampled radius
    double d_min = 1e-4;      // relative to the sampled radius
    std::uint64_t seed = 20240611;
};

// Sampled sup and Hoelder quotients; every entry is a lower bound for the true value.
struct HolderNormEstimate {
    NormKind kind = NormKind::Calpha;
    double alpha = 0.5, r_max = 0;
    double sup_value = 0, sup_grad = 0, sup_second = 0, sup_tangential = 0;
    double semi_value = 0, semi_grad = 0, semi_second = 0, semi_tangential = 0;
    double total = 0;
    long pairs = 0, pairs_used = 0, points = 0;
    double worst_distance = 0;  // pair distance attaining semi_second
};

using JetFunction = std::function<ConeJet(double r, double theta)>;

struct ConePoint {
    double r, theta;
};

namespace detail {

struct PairSet {
    std::vector<ConePoint> pts;
    std::vector<std::pair<int, int>> pairs;
};

// Structured families (radial, angular, divisor-crossing) plus Monte-Carlo
// pairs built in the flat development around a uniformly drawn point.
inline PairSet sample_pairs(double beta, double r_max, const SamplingBudget& b) {
    require(b.random_pairs >= 100, "insufficient sampling budget: need >= 100 random pairs");
    require(b.radial_levels >= 4, "insufficient sampling budget: need >= 4 radial levels");
    require(b.r_floor > 0 && b.r_floor < 1 && b.d_min > 0 && b.d_min < 1, "bad sampling budget");
    PairSet s;
    auto add = [&](ConePoint x, ConePoint y) {
        s.pts.push_back(x);
        s.pts.push_back(y);
        const int n = static_cast<int>(s.pts.size());
        s.pairs.push_back({n - 2, n - 1});
    };
    const auto radii = logspace(r_max * b.r_floor, r_max, b.radial_levels);
    const double thetas[] = {0.0, 0.7, 1.9, 3.3, 5.1};
    const double steps[] = {1e-3, 1e-2, 0.05, 0.2};
    for (double t : thetas)
        for (double r : radii)
            for (double q : steps)
                if (r * (1 + q) <= r_max) add({r, t}, {r * (1 + q), t});
    const double dth[] = {1e-3, 1e-2, 0.1, 0.4, 1.0, 2.0, pi};
    for (double r : radii)
        for (double d : dth) add({r, 0.4}, {r, 0.4 + d});
    for (double r : radii)
        for (double q : {0.5, 1.0, 2.0})
            if (r * q <= r_max) add({r, 1.3}, {r * q, 1.3 + pi});

    std::mt19937_64 rng(b.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double ld0 = std::log(b.d_min * r_max), ld1 = std::log(r_max);
    long tries = 0;
    int made = 0;
    while (made < b.random_pairs && tries < 50L * b.random_pairs) {
        ++tries;
        const double rx = r_max * std::sqrt(U(rng)), tx = 2 * pi * U(rng);
        const double d = std::exp(ld0 + (ld1 - ld0) * U(rng)), ph = 2 * pi * U(rng);
        const double X = rx + d * std::cos(ph), Y = d * std::sin(ph);
        const double ry = std::hypot(X, Y), psi = std::atan2(Y, X);
        if (ry > r_max || ry <= 0 || rx <= 0 || std::abs(psi) > pi * beta) continue;
        add({rx, tx}, {ry, tx + psi / beta});
        ++made;
    }
    require(made == b.random_pairs, "insufficient sampling budget: pair rejection too frequent");
    return s;
}

inline std::array<double, 2> rotate(double psi, const std::array<double, 2>& v) {
    const double c = std::cos(psi), s = std::sin(psi);
    return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

// R H R^T for symmetric H = (h11, h12, h22)
inline std::array<double, 3> rotate(double psi, const std::array<double, 3>& h) {
    const double c = std::cos(psi), s = std::sin(psi);
    const double a = h[0], b = h[1], d = h[2];
    return {c * c * a - 2 * c * s * b + s * s * d, c * s * (a - d) + (c * c - s * s) * b,
            s * s * a + 2 * c * s * b + c * c * d};
}

}  // namespace detail

// Hoelder norms on {r <= r_max}.
//   Calpha:          sup|u| + [u]
//   Donaldson2alpha: C^alpha norms of u, grad u, Laplacian and the tangential part
//   Full2alpha:      C^alpha norms of u, grad u and the full Hessian, with the
//                    Hessian quotient restricted to |r(x) - r(y)| < min(r(x), r(y))/2
inline HolderNormEstimate holder_norm(const ConeDisk& disk, const JetFunction& u, NormKind kind, double r_max,
                                      const SamplingBudget& budget = {}) {
    disk.validate();
    detail::require(r_max > 0 && r_max <= disk.R, "norm radius must lie in (0, R]");
    const auto ps = detail::sample_pairs(disk.beta, r_max, budget);
    std::vector<ConeJet> J(ps.pts.size());
    for (std::size_t i = 0; i < ps.pts.size(); ++i) J[i] = u(ps.pts[i].r, ps.pts[i].theta);
    HolderNormEstimate e;
    e.kind = kind;
    e.alpha = disk.alpha;
    e.r_max = r_max;
    e.points = static_cast<long>(ps.pts.size());
    e.pairs = static_cast<long>(ps.pairs.size());
    const bool second = kind != NormKind::Calpha;
    for (const auto& j : J) {
        e.sup_value = std::max(e.sup_value, std::abs(j.value));
        if (!second) continue;
        e.sup_grad = std::max(e.sup_grad, j.grad_norm());
        e.sup_tangential = std::max(e.sup_tangential, std::abs(j.tangential));
        e.sup_second = std::max(e.sup_second, kind == NormKind::Full2alpha ? j.hess_norm()
                                                                          : std::abs(j.laplacian()));
    }
    for (auto [a, b] : ps.pairs) {
        const auto &x = ps.pts[a], &y = ps.pts[b];
        const double d = cone_distance(disk.beta, x.r, x.theta, y.r, y.theta);
        if (!(d > 1e-14)) continue;
        ++e.pairs_used;
        const double da = std::pow(d, disk.alpha);
        const auto &Jx = J[a], &Jy = J[b];
        e.semi_value = std::max(e.semi_value, std::abs(Jx.value - Jy.value) / da);
        if (!second) continue;
        const double psi = development_angle(disk.beta, x.theta, y.theta);
        const auto gy = detail::rotate(psi, Jy.grad);
        e.semi_grad = std::max(e.semi_grad, std::hypot(Jx.grad[0] - gy[0], Jx.grad[1] - gy[1]) / da);
        e.semi_tangential = std::max(e.semi_tangential, std::abs(Jx.tangential - Jy.tangential) / da);
        double q;
        if (kind == NormKind::Full2alpha) {
            if (!(std::abs(x.r - y.r) < std::min(x.r, y.r) / 2)) continue;
            const auto hy = detail::rotate(psi, Jy.hess);
            const double a0 = Jx.hess[0] - hy[0], a1 = Jx.hess[1] - hy[1], a2 = Jx.hess[2] - hy[2];
            q = std::sqrt(a0 * a0 + 2 * a1 * a1 + a2 * a2) / da;
        } else {
            q = std::abs(Jx.laplacian() - Jy.laplacian()) / da;
        }
        if (q > e.semi_second) {
            e.semi_second = q;
            e.worst_distance = d;
        }
    }
    e.total = e.sup_value + e.semi_value;
    if (second)
        e.total += e.sup_grad + e.semi_grad + e.sup_second + e.semi_second + e.sup_tangential + e.semi_tangential;
    return e;
}

inline JetFunction value_jet(const ConeFunction& f) {
    return [f](double r, double t) {
        ConeJet j;
        j.value = f(r, t);
        return j;
    };
}

template <class Sol>
JetFunction solution_jet(const Sol& s) {
    return [&s](double r, double t) { return s.jet(r, t); };
}

// ---- Schauder uniformity ---------------------------------------------------

// Random trigonometric-radial data with the same coefficients for every beta.
// Item 0 is the profile r^2 = |z_1|^{2 beta}, item 1 is f = 1.
inline std::vector<TrigRadialData> schauder_corpus(double alpha, int count, std::uint64_t seed) {
    detail::require(count >= 2, "corpus needs at least 2 items");
    detail::require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
    std::vector<TrigRadialData> out;
    out.push_back({{{0, 2, 1, 0}}});
    out.push_back({{{0, 0, 1, 0}}});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    const std::vector<std::pair<int, double>> shape = {{0, 0},         {0, alpha}, {0, 2},   {1, alpha},
                                                       {1, 1},         {2, 1 + alpha}, {3, 2}};
    for (int i = 2; i < count; ++i) {
        TrigRadialData d;
        for (auto [k, g] : shape) d.terms.push_back({k, g, N(rng) / (1 + k), k ? N(rng) / (1 + k) : 0.0});
        out.push_back(d);
    }
    return out;
}

struct SchauderRow {
    double beta = 0;
    std::vector<double> donaldson, full, mean_zero;  // per corpus item
    double max_donaldson = 0, max_full = 0, max_mean_zero = 0;
};

struct SchauderReport {
    double alpha = 0.5;
    std::vector<SchauderRow> rows;
    double variation_donaldson = 0, variation_full = 0, variation_mean_zero = 0;
    double threshold = 3;
    bool uniform() const { return variation_donaldson < threshold && variation_full < threshold; }
    bool mean_zero_stable() const { return variation_mean_zero < threshold; }
};

// Solves Delta u = f, u = 0 on r = 1/2, then
//   ratio = |u|_{2,alpha; r <= 1/4} / (|f|_{alpha; r <= 1/2} + |u|_{0; r <= 1/2})
// for both second-order norms, and for the mean-zero part of f
//   sup_{r <= 1/4} |u| / r^{2 + alpha} / |f|_{alpha; r <= 1/2}.
// mean_zero is NaN for items whose source is purely radial
inline SchauderRow schauder_row(double b, double alpha, const std::vector<TrigRadialData>& corpus,
                                const SamplingBudget& budget = {}) {
    detail::require(!corpus.empty(), "empty corpus");
    ConeDisk disk(b, 0.5, alpha);
    SchauderRow row;
    row.beta = b;
    for (const auto& f : corpus) {
        ExactModalSolution u(disk, f);
        auto uj = solution_jet(u);
        const auto fa = holder_norm(disk, value_jet(f), NormKind::Calpha, disk.R, budget);
        const auto u0 = holder_norm(disk, uj, NormKind::Calpha, disk.R, budget);
        const double den = fa.total + u0.sup_value;
        row.donaldson.push_back(holder_norm(disk, uj, NormKind::Donaldson2alpha, disk.R / 2, budget).total / den);
        row.full.push_back(holder_norm(disk, uj, NormKind::Full2alpha, disk.R / 2, budget).total / den);
        const auto fz = f.mean_zero();
        if (fz.terms.empty()) {
            row.mean_zero.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        ExactModalSolution uz(disk, fz);
        const double fzn = holder_norm(disk, value_jet(fz), NormKind::Calpha, disk.R, budget).total;
        double w = 0;
        for (double r : logspace(disk.R * 1e-4, disk.R / 2, 200))
            for (int j = 0; j < 64; ++j)
                w = std::max(w, std::abs(uz.value(r, 2 * pi * j / 64)) / std::pow(r, 2 + alpha));
        row.mean_zero.push_back(w / fzn);
    }
    row.max_donaldson = *std::max_element(row.donaldson.begin(), row.donaldson.end());
    row.max_full = *std::max_element(row.full.begin(), row.full.end());
    for (double m : row.mean_zero)
        if (!std::isnan(m)) row.max_mean_zero = std::max(row.max_mean_zero, m);
    return row;
}

inline SchauderReport schauder_probe(const std::vector<double>& betas, double alpha,
                                     const std::vector<TrigRadialData>& corpus, const SamplingBudget& budget = {}) {
    detail::require(betas.size() >= 2, "schauder probe needs at least 2 betas");
    SchauderReport rep;
    rep.alpha = alpha;
    for (double b : betas) rep.rows.push_back(schauder_row(b, alpha, corpus, budget));
    auto variation = [&](auto get) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (const auto& r : rep.rows) {
            lo = std::min(lo, get(r));
            hi = std::max(hi, get(r));
        }
        return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    };
    rep.variation_donaldson = variation([](const SchauderRow& r) { return r.max_donaldson; });
    rep.variation_full = variation([](const SchauderRow& r) { return r.max_full; });
    rep.variation_mean_zero = variation([](const SchauderRow& r) { return r.max_mean_zero; });
    return rep;
}

// ---- gradient estimates ----------------------------------------------------

struct GradientBoundRow {
    double beta = 0;
    double C = 0;        // tightest constant over the corpus
    double worst_r = 0;
};

struct GradientBoundReport {
    std::vector<GradientBoundRow> rows;
    double C = 0;  // one constant for the sweep
    std::vector<double> decay_factors;  // (1/beta) 2^{-1/beta} at beta = 0.2, 0.1, 0.05
    bool decay_factors_decreasing = false;
};

// |grad u| <= C [ (1/beta)(r/rho)^{1/beta} sup|u| / r + r sup|f| ] for r <= 2^{-beta} rho, rho = R,
// on mode-solver solutions with random boundary data.
inline GradientBoundReport gradient_bound_probe(const std::vector<double>& betas,
                                                const std::vector<TrigRadialData>& corpus, std::uint64_t seed,
                                                const ModeSolveOptions& opt = {}) {
    detail::require(!betas.empty() && !corpus.empty(), "gradient probe needs betas and a corpus");
    GradientBoundReport rep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<std::vector<TrigTerm>> bcs;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        bcs.push_back({{0, N(rng), 0}, {1, N(rng), N(rng)}, {2, N(rng) / 2, N(rng) / 2}});
    for (double b : betas) {
        ConeDisk disk(b);
        const double rho = disk.R;
        GradientBoundRow row;
        row.beta = b;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto& f = corpus[i];
            const auto& g = bcs[i];
            auto gf = [&](double t) {
                double s = 0;
                for (const auto& q : g) s += q.a * std::cos(q.k * t) + q.b * std::sin(q.k * t);
                return s;
            };
            const auto u = poisson_solve_modes(disk, f, gf, opt);
            double su = 0, sf = 0;
            for (double r : linspace(0, rho, 101))
                for (int j = 0; j < 64; ++j) {
                    su = std::max(su, std::abs(u.value(r, 2 * pi * j / 64)));
                    sf = std::max(sf, std::abs(f(r, 2 * pi * j / 64)));
                }
            for (double r : logspace(rho * 1e-3, rho * std::pow(2.0, -b), 120))
                for (int j = 0; j < 32; ++j) {
                    const double t = 2 * pi * j / 32;
                    const double bound = std::pow(r / rho, 1 / b) * su / (b * r) + r * sf;
                    const double c = u.jet(r, t).grad_norm() / bound;
                    if (c > row.C) {
                        row.C = c;
                        row.worst_r = r;
                    }
                }
        }
        rep.C = std::max(rep.C, row.C);
        rep.rows.push_back(row);
    }
    for (double b : {0.2, 0.1, 0.05}) rep.decay_factors.push_back(std::pow(0.5, 1 / b) / b);
    rep.decay_factors_decreasing = rep.decay_factors[0] > rep.decay_factors[1] && rep.decay_factors[1] > rep.decay_factors[2];
    return rep;
}

// Harmonic u = sum a_k (r/R)^{k/beta} cos(k theta + phi_k) on the cone disk.
struct HarmonicSeries {
    double beta = 0.25, R = 0.5;
    std::vector<TrigTerm> terms;

    ConeJet jet(double r, double theta) const {
        std::vector<ModeValues> m;
        for (const auto& t : terms) {
            const auto H = detail::harmonic_profile(t.k / beta, R, r);
            m.push_back({t.k, t.a * H[0], t.a * H[1], t.a * H[2], t.b * H[0], t.b * H[1], t.b * H[2]});
        }
        return jet_from_modes(beta, r, theta, m);
    }
    double value(double r, double theta) const { return jet(r, theta).value; }
};

struct InteriorGradientRow {
    double beta = 0, rho = 0;
    bool centered = true;  // ball centred on the divisor
    double C = 0;
};

struct InteriorGradientReport {
    std::vector<InteriorGradientRow> rows;
    double C_max = 0, C_min = 0;
};

// sup_{B(rho/2)} |grad u| <= C/rho sup_{B(rho)} |u| for harmonic u, at p = 0 and at
// p with r(p) > rho (ball sampled in the flat development around p).
inline InteriorGradientReport interior_gradient_probe(const std::vector<double>& betas,
                                                      const std::vector<double>& rhos, int functions,
                                                      std::uint64_t seed) {
    InteriorGradientReport rep;
    rep.C_min = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<std::vector<TrigTerm>> fams(functions);
    for (auto& f : fams)
        for (int k = 0; k <= 3; ++k) f.push_back({k, N(rng), k ? N(rng) : 0.0});
    auto ball_sup = [](auto&& F, double beta, double rp, double tp, double rad) {
        // sup of F over the development disk of radius rad around (rp, tp)
        double s = 0;
        for (double q : linspace(0, 1, 41))
            for (int j = 0; j < 72; ++j) {
                const double a = 2 * pi * j / 72, X = rp + q * rad * std::cos(a), Y = q * rad * std::sin(a);
                const double r = std::hypot(X, Y);
                const double t = tp + (r > 0 ? std::atan2(Y, X) / beta : 0);
                s = std::max(s, F(r, t));
            }
        return s;
    };
    for (double b : betas)
        for (double rho : rhos)
            for (bool centered : {true, false}) {
                InteriorGradientRow row{b, rho, centered, 0};
                const double rp = centered ? 0 : 1.5 * rho, R = centered ? rho : 2.5 * rho;
                for (const auto& f : fams) {
                    HarmonicSeries h{b, R, f};
                    const double su = ball_sup([&](double r, double t) { return std::abs(h.value(r, t)); }, b, rp, 0.3, rho);
                    const double sg =
                        ball_sup([&](double r, double t) { return h.jet(r, t).grad_norm(); }, b, rp, 0.3, rho / 2);
                    row.C = std::max(row.C, rho * sg / su);
                }
                rep.C_max = std::max(rep.C_max, row.C);
                rep.C_min = std::min(rep.C_min, row.C);
                rep.rows.push_back(row);
            }
    return rep;
}

struct DivisorBallRow {
    double beta = 0, rho = 0;
    double C_first = 0;   // |grad u| + |grad (1/beta) d_theta u| against (1/beta)(r/rho)^{1/beta-1} + r/rho
    double C_second = 0;  // |grad d_r u| against (1/beta)(r/rho)^{1/beta-2} + 1
};

struct DivisorBallReport {
    std::vector<DivisorBallRow> rows;
    double C_first = 0, C_second = 0;
};

// Harmonic product functions on cone x C at l = 0:
//   u = a0 (r^2 - |z'|^2)/rho^2 + sum_k a_k (r/rho)^{k/beta} cos(k theta + phi_k) (1 + c_k x'/rho)
// Derivatives are taken along the cone factor at points with |z| < rho/4.
inline DivisorBallReport divisor_ball_probe(const std::vector<double>& betas, const std::vector<double>& rhos,
                                            int functions, std::uint64_t seed) {
    DivisorBallReport rep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    struct Fam {
        double a0;
        std::vector<TrigTerm> t;
        std::vector<double> c;
    };
    std::vector<Fam> fams(functions);
    for (auto& f : fams) {
        f.a0 = N(rng);
        for (int k = 1; k <= 3; ++k) {
            f.t.push_back({k, N(rng), N(rng)});
            f.c.push_back(N(rng));
        }
    }
    for (double b : betas)
        for (double rho : rhos) {
            DivisorBallRow row{b, rho, 0, 0};
            for (const auto& f : fams) {
                // cone-factor modes at fixed x'
                auto modes = [&](double r, double xp) {
                    std::vector<ModeValues> m;
                    const double q = (r * r - xp * xp) / (rho * rho);
                    m.push_back({0, f.a0 * q, f.a0 * 2 * r / (rho * rho), f.a0 * 2 / (rho * rho), 0, 0, 0});
                    for (std::size_t i = 0; i < f.t.size(); ++i) {
                        const auto H = detail::harmonic_profile(f.t[i].k / b, rho, r);
                        const double s = 1 + f.c[i] * xp / rho;
                        m.push_back({f.t[i].k, s * f.t[i].a * H[0], s * f.t[i].a * H[1], s * f.t[i].a * H[2],
                                     s * f.t[i].b * H[0], s * f.t[i].b * H[1], s * f.t[i].b * H[2]});
                    }
                    return m;
                };
                double su = 0;
                for (double q : linspace(0, 1, 41))
                    for (double xr : linspace(-1, 1, 21)) {
                        const double r = rho * q * std::sqrt(std::max(0.0, 1 - xr * xr)), xp = rho * xr * q;
                        for (int j = 0; j < 48; ++j)
                            su = std::max(su, std::abs(jet_from_modes(b, r, 2 * pi * j / 48, modes(r, xp)).value));
                    }
                for (double r : logspace(rho * 1e-3, rho / 4.5, 60))
                    for (double xp : {0.0, rho / 12})
                        for (int j = 0; j < 24; ++j) {
                            const double th = 2 * pi * j / 24;
                            const auto m = modes(r, xp);
                            const auto J = jet_from_modes(b, r, th, m);
                            // w = (1/beta) d_theta u and v = d_r u as cone functions
                            double w1 = 0, w2 = 0, v1 = 0, v2 = 0;
                            for (const auto& mv : m) {
                                const double c = std::cos(mv.k * th), s = std::sin(mv.k * th), k = mv.k;
                                w1 += k / b * (-mv.A1 * s + mv.B1 * c);
                                w2 += k / b * -k * (mv.A * c + mv.B * s) / (b * r);
                                v1 += mv.A2 * c + mv.B2 * s;
                                v2 += k * (-mv.A1 * s + mv.B1 * c) / (b * r);
                            }
                            const double lhs1 = J.grad_norm() + std::hypot(w1, w2);
                            const double rhs1 = su / rho * (std::pow(r / rho, 1 / b - 1) / b + r / rho);
                            const double lhs2 = std::hypot(v1, v2);
                            const double rhs2 = su / (rho * rho) * (std::pow(r / rho, 1 / b - 2) / b + 1);
                            row.C_first = std::max(row.C_first, lhs1 / rhs1);
                            row.C_second = std::max(row.C_second, lhs2 / rhs2);
                        }
            }
            rep.C_first = std::max(rep.C_first, row.C_first);
            rep.C_second = std::max(rep.C_second, row.C_second);
            rep.rows.push_back(row);
        }
    return rep;
}

// Smoke test for the perturbed operator Delta + b d_r: the solution moves by O(b).
struct PerturbedSmoke {
    double drift = 0;
    double sup_difference = 0;
    double difference_over_drift = 0;
};

inline PerturbedSmoke perturbed_smoke(const ConeDisk& disk, const ConeFunction& f, double drift,
                                      ModeSolveOptions opt = {}) {
    detail::require(drift != 0, "drift must be nonzero");
    auto zero = [](double) { return 0.0; };
    const auto u0 = poisson_solve_modes(disk, f, zero, opt);
    opt.drift = drift;
    const auto u1 = poisson_solve_modes(disk, f, zero, opt);
    PerturbedSmoke s;
    s.drift = drift;
    for (double r : linspace(0, disk.R, 51))
        for (int j = 0; j < 32; ++j) {
            const double t = 2 * pi * j / 32;
            s.sup_difference = std::max(s.sup_difference, std::abs(u1.value(r, t) - u0.value(r, t)));
        }
    s.difference_over_drift = s.sup_difference / std::abs(drift);
    return s;
}

}  // namespace conelab
