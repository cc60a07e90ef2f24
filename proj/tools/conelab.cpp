#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "conelab/verify.hpp"

using json = nlohmann::ordered_json;
using namespace conelab;
using conelab::detail::cat;

namespace {

constexpr const char* tool_version = "0.1.0";
constexpr int schema_version = 1;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string command;
    std::vector<int> n = {1, 2, 3};
    std::string sigma = "pos";
    std::vector<double> beta;
    double mu = 0.8;
    double alpha = 0.5;
    int grid = 0;  // 0: command default
    double tol = 1e-10;
    std::uint64_t seed = 7;
    std::string out;
    std::string format = "csv";
    int jobs = 0;  // 0: hardware concurrency
    std::string suite = "all";
};

json to_json(const RunConfig& c) {
    return json{{"command", c.command}, {"n", c.n},         {"sigma", c.sigma}, {"beta", c.beta},
                {"mu", c.mu},           {"alpha", c.alpha}, {"grid", c.grid},   {"tol", c.tol},
                {"seed", c.seed},       {"format", c.format}, {"suite", c.suite}};
}

template <class T>
void take(const json& j, const char* key, T& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
}

void from_json(const json& j, RunConfig& c) {
    if (j.contains("n")) {
        if (j["n"].is_array())
            j["n"].get_to(c.n);
        else
            c.n = {j["n"].get<int>()};
    }
    take(j, "sigma", c.sigma);
    if (j.contains("beta")) {
        if (j["beta"].is_array())
            j["beta"].get_to(c.beta);
        else
            c.beta = {j["beta"].get<double>()};
        if (c.beta.empty() && c.command != "verify" && c.command != "suites" && c.command != "constants")
            throw UsageError("beta list is empty");
    }
    take(j, "mu", c.mu);
    take(j, "alpha", c.alpha);
    take(j, "grid", c.grid);
    take(j, "tol", c.tol);
    take(j, "seed", c.seed);
    take(j, "out", c.out);
    take(j, "format", c.format);
    take(j, "jobs", c.jobs);
    take(j, "suite", c.suite);
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
    std::vector<T> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        try {
            if constexpr (std::is_same_v<T, int>)
                v.push_back(std::stoi(item, &used));
            else
                v.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw UsageError(cat("bad value in --", what, ": '", item, "'"));
    }
    return v;
}

// ---- result table ----

using Cell = std::variant<std::monostate, long long, double, std::string>;

struct ResultTable {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows = {};
    json config = {};

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw std::logic_error("row width does not match schema");
        rows.push_back(std::move(row));
    }
};

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void write_csv(std::ostream& os, const ResultTable& t) {
    os << "# schema=" << t.schema << "/" << schema_version << "\n";
    os << "# version=" << tool_version << "\n";
    os << "# config=" << t.config.dump() << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ",";
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, long long>) os << v;
                    if constexpr (std::is_same_v<V, double>) os << fmt(v);
                    if constexpr (std::is_same_v<V, std::string>) os << csv_field(v);
                },
                row[i]);
        }
        os << "\n";
    }
}

void write_json(std::ostream& os, const ResultTable& t) {
    json j;
    j["schema"] = t.schema + "/" + std::to_string(schema_version);
    j["version"] = tool_version;
    j["config"] = t.config;
    j["columns"] = t.columns;
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& c : row)
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, std::monostate>)
                        r.push_back(nullptr);
                    else if constexpr (std::is_same_v<V, double>)
                        r.push_back(std::isfinite(v) ? json(v) : json(fmt(v)));
                    else
                        r.push_back(v);
                },
                c);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    os << j.dump(1) << "\n";
}

// ---- worker pool: results come back in index order ----

template <class R, class F>
std::vector<R> parallel_map(std::size_t count, int jobs, F f) {
    std::vector<R> out(count);
    std::vector<std::exception_ptr> err(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < count;) {
            try {
                out[i] = f(i);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    const std::size_t nt = std::min<std::size_t>(std::max(1, jobs), count);
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < nt; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---- validation ----

Sign sign_of(const RunConfig& c) {
    if (c.sigma == "pos") return Sign::Positive;
    if (c.sigma == "neg") return Sign::Negative;
    throw UsageError("--sigma must be pos or neg, got '" + c.sigma + "'");
}

void need_n(const RunConfig& c) {
    if (c.n.empty()) throw UsageError("--n list is empty");
    for (int n : c.n)
        if (n < 1) throw UsageError(cat("--n must be >= 1, got ", n));
}

void need_betas(const RunConfig& c, double hi, bool closed = false) {
    if (c.beta.empty()) throw UsageError("--beta list is empty");
    for (double b : c.beta)
        if (!(b > 0 && (closed ? b <= hi : b < hi))) throw UsageError(cat("--beta value ", b, " out of range"));
}

void default_betas(RunConfig& c, std::vector<double> d) {
    if (c.beta.empty()) c.beta = std::move(d);
}

// ---- commands ----

ResultTable cmd_constants(const RunConfig& c) {
    need_n(c);
    ResultTable t{"constants", {"n", "I_n", "J_n", "c_n", "c_prime_n", "a_n", "I_error", "J_error"}};
    for (int n : c.n) {
        const auto r = constants(n);
        t.add({(long long)n, r.I_n, r.J_n, r.c_n, r.c_prime_n, r.a_n, r.I_error, r.J_error});
    }
    return t;
}

ResultTable cmd_potential(RunConfig& c) {
    need_n(c);
    default_betas(c, {1.0});
    need_betas(c, 1, true);
    const Sign s = sign_of(c);
    const int m = c.grid > 0 ? c.grid : 201;
    if (m < 2) throw UsageError("--grid must be >= 2");
    ResultTable t{"potential", {"n", "sigma", "beta", "t", "phi", "dphi", "ddphi", "first_integral_residual"}};
    for (int n : c.n)
        for (double b : c.beta) {
            ScaledPotential sp(profile(s, n), b);
            for (double x : linspace(-10, -0.01, m)) {
                const auto j = sp.jet(x);
                const auto j1 = profile(s, n).jet(b * x);
                t.add({(long long)n, c.sigma, b, x, j.phi, j.d1, j.d2,
                       profile(s, n).first_integral_residual(j1.phi, j1.d1)});
            }
        }
    return t;
}

ResultTable cmd_curvature(RunConfig& c) {
    need_n(c);
    default_betas(c, {0.2, 0.1, 0.05, 0.02});
    need_betas(c, 1);
    const Sign s = sign_of(c);
    const int m = c.grid > 0 ? c.grid : 121;
    std::vector<double> ug = s == Sign::Negative ? linspace(-30, -0.01, m) : logspace(1e-8, 30, m);
    if (s == Sign::Positive)
        for (auto& u : ug) u = -u;
    ResultTable t{"curvature",
                  {"n", "sigma", "beta", "u", "q1", "q2", "q3", "q4", "max_abs_q", "bound", "disagreement"}};
    for (int n : c.n)
        for (double b : c.beta)
            for (double u : ug) {
                const auto r = curvature_quantities(profile(s, n), b, u);
                t.add({(long long)n, c.sigma, b, u, r.q[0], r.q[1], r.q[2], r.q[3], r.max_abs_q, r.bound_estimate,
                       r.disagreement});
            }
    return t;
}

ResultTable cmd_collapse(RunConfig& c) {
    need_n(c);
    default_betas(c, {0.2, 0.1, 0.05, 0.02, 0.01});
    need_betas(c, 1);
    const int m = c.grid > 0 ? c.grid : 21;
    ResultTable t{"collapse", {"n", "quantity", "beta", "x", "value", "exact", "error"}};
    const double ninf = -std::numeric_limits<double>::infinity();
    for (int n : c.n) {
        const auto& p = profile(Sign::Positive, n);
        const double L = radial_length(p, ninf, 0.0), L0 = interval_length(n);
        t.add({(long long)n, "interval_length", {}, {}, L, L0, std::abs(L - L0)});
        for (const auto& row : limit_measure_pushforward(CollapseProfile(p, c.beta.front()), linspace(0, pi / 2, m)))
            t.add({(long long)n, "limit_cdf", {}, row.s, row.cdf, row.exact, row.error});
        for (double b : c.beta) {
            const auto v = model_volume(CollapseProfile(p, b));
            t.add({(long long)n, "volume", b, {}, v.quadrature, v.closed_form, std::abs(v.quadrature - v.closed_form)});
        }
        if (c.beta.size() >= 2) {
            const auto f = volume_exponent_fit(n, c.beta);
            t.add({(long long)n, "volume_exponent", {}, {}, f.exponent, (double)n, std::abs(f.exponent - n)});
        }
    }
    return t;
}

ResultTable cmd_glue(RunConfig& c) {
    need_n(c);
    default_betas(c, {0.1, 0.05, 0.02});
    need_betas(c, 1);
    if (!(c.mu > 0 && c.mu < 1)) throw UsageError(cat("--mu must lie in (0, 1), got ", c.mu));
    for (int n : c.n)
        for (double b : c.beta) GlueConfig(n, b, c.mu);
    struct Item {
        int n;
        double beta;
    };
    std::vector<Item> items;
    for (int n : c.n)
        for (double b : c.beta) items.push_back({n, b});
    struct Out {
        ZoneSups z;
        NewtonResult r;
    };
    const auto res = parallel_map<Out>(items.size(), c.jobs, [&](std::size_t i) {
        const GlueConfig gc(items[i].n, items[i].beta, c.mu);
        auto r = newton_solve_radial(gc);
        r.u.clear(), r.tau.clear(), r.phi.clear(), r.initial.clear();
        return Out{zone_sups(gc), std::move(r)};
    });
    ResultTable t{"glue",
                  {"n", "beta", "mu", "difference_0", "difference_1", "difference_2", "residual_0", "residual_1",
                   "residual_2", "newton_iterations", "newton_residual", "newton_error", "newton_order",
                   "correction_norm"}};
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& z = res[i].z;
        const auto& r = res[i].r;
        t.add({(long long)items[i].n, items[i].beta, c.mu, z.difference[0], z.difference[1], z.difference[2],
               z.residual[0], z.residual[1], z.residual[2], (long long)r.iterations, r.final_residual,
               r.max_error_vs_exact, r.terminal_order, r.correction_norm});
    }
    return t;
}

ResultTable cmd_poisson(RunConfig& c) {
    const int count = c.grid > 0 ? c.grid : 20;
    auto corpus = poisson_corpus(count, c.seed);
    if (!c.beta.empty()) {
        need_betas(c, 0.5);
        for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].beta = c.beta[i % c.beta.size()];
    }
    struct Out {
        double gap = 0, sup = 0;
        int points = 0;
    };
    const double tol = c.tol;
    const auto seed = c.seed;
    const auto res = parallel_map<Out>(corpus.size(), c.jobs, [&](std::size_t i) {
        const auto& pr = corpus[i];
        ConeDisk d(pr.beta);
        auto f = [&](double r, double t) { return pr.f(r, t); };
        auto g = [&](double t) { return pr.g(t); };
        const auto u = poisson_solve_modes(d, f, g);
        std::mt19937_64 rng(seed + 1000 * i);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        Out o;
        for (int q = 0; q < 8; ++q) {
            const double r = 0.45 * U(rng), t = 2 * pi * U(rng);
            const double v = u.value(r, t);
            o.gap = std::max(o.gap, std::abs(green_representation(d, f, g, r, t, tol).value - v));
            o.sup = std::max(o.sup, std::abs(v));
            ++o.points;
        }
        return o;
    });
    ResultTable t{"poisson", {"problem", "beta", "points", "sup_abs_u", "mode_vs_green"}};
    for (std::size_t i = 0; i < corpus.size(); ++i)
        t.add({(long long)i, corpus[i].beta, (long long)res[i].points, res[i].sup, res[i].gap});
    return t;
}

ResultTable cmd_schauder(RunConfig& c) {
    default_betas(c, {0.45, 0.25, 0.1, 0.05, 0.02});
    need_betas(c, 0.5);
    if (!(c.alpha > 0 && c.alpha < 1)) throw UsageError(cat("--alpha must lie in (0, 1), got ", c.alpha));
    const int count = c.grid > 0 ? c.grid : 8;
    const auto corpus = schauder_corpus(c.alpha, count, c.seed);
    const auto rows = parallel_map<SchauderRow>(c.beta.size(), c.jobs, [&](std::size_t i) {
        return schauder_row(c.beta[i], c.alpha, corpus);
    });
    ResultTable t{"schauder", {"beta", "item", "donaldson_ratio", "full_ratio", "mean_zero_ratio"}};
    for (const auto& row : rows)
        for (std::size_t k = 0; k < row.donaldson.size(); ++k)
            t.add({row.beta, (long long)k, row.donaldson[k], row.full[k],
                   std::isnan(row.mean_zero[k]) ? Cell{} : Cell{row.mean_zero[k]}});
    return t;
}

ResultTable cmd_verify(const RunConfig& c) {
    std::vector<const Check*> sel;
    for (const auto& ch : acceptance_checks())
        if (c.suite == "all" || ch.suite == c.suite) sel.push_back(&ch);
    if (sel.empty()) throw UsageError("unknown suite: " + c.suite);
    // sequential: each check is timed against its own budget
    std::vector<CheckResult> res;
    for (const auto* ch : sel) res.push_back(run_check(*ch));
    ResultTable t{"verify", {"id", "suite", "pass", "metric", "tolerance", "budget_seconds", "detail"}};
    for (const auto& r : res)
        t.add({(long long)r.id, r.suite, (long long)r.pass, r.metric, r.tolerance, r.budget, r.detail});
    return t;
}

ResultTable cmd_suites(const RunConfig&) {
    ResultTable t{"suites", {"id", "suite", "budget_seconds"}};
    for (const auto& ch : acceptance_checks()) t.add({(long long)ch.id, ch.suite, ch.budget});
    return t;
}

void fail(const char* kind, const std::string& msg) {
    std::cerr << json{{"error", kind}, {"message", msg}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conelab: cone-angle Kahler-Einstein model computations"};
    app.require_subcommand(1);

    std::string n_s, beta_s, sigma, format, out, config_path, suite;
    double mu = 0, alpha = 0, tol = 0;
    int grid = 0, jobs = 0;
    std::uint64_t seed = 0;
    std::vector<CLI::Option*> opts;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"constants", "integrals I_n, J_n and the derived constants"},
        {"potential", "profile phi(t) with its first two derivatives"},
        {"curvature", "sectional curvatures of the model metric"},
        {"collapse", "interval length, limit measure and volume scaling"},
        {"glue", "glued potential residuals and the radial Newton solve"},
        {"poisson", "cone Poisson problems: mode solver against Green"},
        {"schauder", "Holder ratios of solutions over a beta sweep"},
        {"verify", "run acceptance checks"},
        {"suites", "list acceptance checks"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--n", n_s, "dimension list, e.g. 1,2,3");
        sub->add_option("--sigma", sigma)->check(CLI::IsMember({"pos", "neg"}));
        sub->add_option("--beta", beta_s, "cone angle list, e.g. 0.1,0.05");
        sub->add_option("--mu", mu);
        sub->add_option("--alpha", alpha);
        sub->add_option("--grid", grid, "grid size or corpus size");
        sub->add_option("--tol", tol);
        sub->add_option("--seed", seed);
        sub->add_option("--out", out);
        sub->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--jobs", jobs);
        sub->add_option("--config", config_path, "JSON file with the same keys as the flags");
        if (name == "verify") sub->add_option("suite", suite, "suite name or 'all'");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("usage", e.what());
        return 2;
    }

    auto* sub = app.get_subcommands().front();
    RunConfig cfg;
    cfg.command = sub->get_name();
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config file " + config_path);
            from_json(json::parse(in), cfg);
        }
        cfg.command = sub->get_name();
        auto set = [&](const char* flag) { return sub->count(flag) > 0; };
        if (set("--n")) cfg.n = parse_list<int>(n_s, "n");
        if (set("--beta")) {
            cfg.beta = parse_list<double>(beta_s, "beta");
            if (cfg.beta.empty()) throw UsageError("--beta list is empty");
        }
        if (set("--sigma")) cfg.sigma = sigma;
        if (set("--mu")) cfg.mu = mu;
        if (set("--alpha")) cfg.alpha = alpha;
        if (set("--grid")) cfg.grid = grid;
        if (set("--tol")) cfg.tol = tol;
        if (set("--seed")) cfg.seed = seed;
        if (set("--out")) cfg.out = out;
        if (set("--format")) cfg.format = format;
        if (set("--jobs")) cfg.jobs = jobs;
        if (cfg.command == "verify" && set("suite")) cfg.suite = suite;
        if (cfg.jobs <= 0) cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
        if (cfg.format != "csv" && cfg.format != "json") throw UsageError("--format must be csv or json");
        if (cfg.grid < 0) throw UsageError("--grid must be >= 0");
        if (!(cfg.tol > 0)) throw UsageError("--tol must be > 0");
    } catch (const std::exception& e) {
        fail("usage", e.what());
        return 2;
    }

    ResultTable table;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto& c = cfg.command;
        if (c == "constants") table = cmd_constants(cfg);
        else if (c == "potential") table = cmd_potential(cfg);
        else if (c == "curvature") table = cmd_curvature(cfg);
        else if (c == "collapse") table = cmd_collapse(cfg);
        else if (c == "glue") table = cmd_glue(cfg);
        else if (c == "poisson") table = cmd_poisson(cfg);
        else if (c == "schauder") table = cmd_schauder(cfg);
        else if (c == "verify") table = cmd_verify(cfg);
        else table = cmd_suites(cfg);
    } catch (const UsageError& e) {
        fail("usage", e.what());
        return 2;
    } catch (const DomainError& e) {
        fail("validation", e.what());
        return 2;
    } catch (const ConvergenceError& e) {
        fail("solver", e.what());
        return 3;
    } catch (const std::exception& e) {
        fail("internal", e.what());
        return 1;
    }
    table.config = to_json(cfg);

    std::ofstream file;
    if (!cfg.out.empty()) {
        file.open(cfg.out);
        if (!file) {
            fail("io", "cannot write " + cfg.out);
            return 4;
        }
    }
    std::ostream& os = cfg.out.empty() ? std::cout : file;
    if (cfg.format == "json")
        write_json(os, table);
    else
        write_csv(os, table);
    os.flush();
    if (!os) {
        fail("io", "write failed");
        return 4;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << json{{"wall_seconds", wall}}.dump() << std::endl;
    if (cfg.command == "verify")
        for (const auto& row : table.rows)
            if (std::get<long long>(row[2]) == 0) return 5;
    return 0;
}
