#include "hypermosaic/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "hypermosaic/errors.hpp"
#include "hypermosaic/extremes.hpp"
#include "hypermosaic/integral.hpp"
#include "hypermosaic/mosaic.hpp"
#include "hypermosaic/parallel.hpp"
#include "hypermosaic/process.hpp"
#include "hypermosaic/stats.hpp"
#include "hypermosaic/stopping.hpp"

namespace hypermosaic::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string normalize_key(std::string k) {
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

[[noreturn]] void invalid(const std::string& key, const std::string& value, const std::string& why) {
    throw ConfigInvalid("key '" + key + "' = '" + value + "': " + why);
}

double parse_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(t, &used);
    } catch (const std::exception&) {
        invalid(key, v, "not a number");
    }
    if (used != t.size()) invalid(key, v, "not a number");
    return x;
}

long long parse_integer(const std::string& key, const std::string& v, long long lo) {
    const double x = parse_double(key, v);  // accepts 1e5
    if (!std::isfinite(x) || x != std::floor(x) || x < static_cast<double>(lo) || x > 9.2e18)
        invalid(key, v, "expected an integer >= " + std::to_string(lo));
    return static_cast<long long>(x);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : v) {
        if (ch == ',' || ch == ' ' || ch == ';' || ch == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// "1,2,3" or a range "lo:hi[:step]"
std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& tok : split_list(v)) {
        const auto c1 = tok.find(':');
        if (c1 == std::string::npos) {
            out.push_back(parse_double(key, tok));
            continue;
        }
        const auto c2 = tok.find(':', c1 + 1);
        const double lo = parse_double(key, tok.substr(0, c1));
        const double hi = parse_double(key, tok.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1));
        const double step = c2 == std::string::npos ? 1.0 : parse_double(key, tok.substr(c2 + 1));
        if (!(step > 0) || hi < lo || (hi - lo) / step > 1e6) invalid(key, v, "bad range");
        for (long k = 0; lo + k * step <= hi + 1e-9 * step; ++k) out.push_back(lo + k * step);
    }
    if (out.empty()) invalid(key, v, "empty list");
    return out;
}

// "e6", "e^6", or a plain n > 1; returns log n
double parse_log_n(const std::string& key, const std::string& tok) {
    if (!tok.empty() && (tok[0] == 'e' || tok[0] == 'E')) {
        std::string rest = tok.substr(1);
        if (!rest.empty() && rest[0] == '^') rest = rest.substr(1);
        return parse_double(key, rest);
    }
    const double n = parse_double(key, tok);
    if (!(n > 1.0)) invalid(key, tok, "n must exceed 1");
    return std::log(n);
}

std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// compact label for metric names: 0.25 -> "0.25", 6 -> "6"
std::string label(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::initializer_list<double> xs) {
        std::vector<std::string> r;
        for (double x : xs) r.push_back(fmt17(x));
        rows.push_back(std::move(r));
    }
};

void write_table(const fs::path& path, const Table& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigInvalid("cannot write " + path.string());
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
        os << "\r\n";
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    Rng r(seed, 0xC11ULL * 1000003ULL + salt);
    return r();
}

SizeFunctional size_functional(const std::string& name, int d) {
    if (name == "volume") return SizeFunctional::volume(d);
    if (name == "surface_area" || name == "surface") return SizeFunctional::surface_area(d);
    throw ConfigInvalid("sigma must be volume or surface_area, got '" + name + "'");
}

struct Context {
    const ExperimentConfig& cfg;
    ExperimentReport& rep;
    std::deque<Table> tables;  // stable references across table() calls

    bool has(const std::string& k) const { return cfg.extra.count(k) != 0; }
    double num(const std::string& k, double def) const {
        return has(k) ? parse_double(k, cfg.extra.at(k)) : def;
    }
    std::size_t count(const std::string& k, std::size_t def) const {
        return has(k) ? static_cast<std::size_t>(parse_integer(k, cfg.extra.at(k), 1)) : def;
    }
    std::vector<double> list(const std::string& k, std::vector<double> def) const {
        return has(k) ? parse_list(k, cfg.extra.at(k)) : def;
    }
    std::string str(const std::string& k, const std::string& def) const { return has(k) ? cfg.extra.at(k) : def; }

    std::size_t replicates(std::size_t def) {
        const std::size_t r = cfg.replicates ? cfg.replicates : def;
        rep.params["replicates"] = r;
        return r;
    }
    std::size_t samples(std::size_t def) {
        const std::size_t s = cfg.samples ? cfg.samples : def;
        rep.params["samples"] = s;
        return s;
    }
    double c_or(double def) {
        const double c = std::isnan(cfg.c) ? def : cfg.c;
        rep.params["c"] = c;
        return c;
    }
    std::vector<double> log_n_or(std::vector<double> def) {
        auto l = cfg.log_n.empty() ? def : cfg.log_n;
        rep.params["log_n"] = l;
        return l;
    }
    template <class T>
    void param(const std::string& k, const T& v) {
        rep.params[k] = v;
    }
    double tol() const { return cfg.tolerance_sigma; }

    Metric& add(Metric m) {
        rep.metrics.push_back(std::move(m));
        return rep.metrics.back();
    }
    void info(const std::string& name, double est, double target = kNaN, double lo = kNaN, double hi = kNaN) {
        add({name, est, target, lo, hi, false, true});
    }
    void check(const std::string& name, double est, bool pass, double target = kNaN, double lo = kNaN,
               double hi = kNaN) {
        add({name, est, target, lo, hi, true, pass});
    }
    // |est - target| <= tol * se
    void within(const std::string& name, double est, double target, double se) {
        const double h = tol() * se;
        check(name, est, std::fabs(est - target) <= h, target, est - h, est + h);
    }
    Table& table(const std::string& name, std::vector<std::string> header) {
        tables.push_back({name, std::move(header), {}});
        return tables.back();
    }
};

Box unit_box(int d) { return {Vector::Zero(d), Vector::Ones(d)}; }

Box window_of(const ExperimentConfig& c) {
    if (c.window.empty()) return unit_box(c.d);
    if (static_cast<int>(c.window.size()) != 2 * c.d)
        throw ConfigInvalid("window needs 2d numbers lo_1..lo_d,hi_1..hi_d");
    Box b{Vector(c.d), Vector(c.d)};
    for (int i = 0; i < c.d; ++i) {
        b.lo[i] = c.window[i];
        b.hi[i] = c.window[c.d + i];
        if (!(b.hi[i] > b.lo[i])) throw ConfigInvalid("window has an empty side");
    }
    return b;
}

Certification parse_rule(const std::string& s) {
    if (s == "stopping_radius" || s == "stopping") return Certification::stopping_radius;
    if (s == "hull") return Certification::hull;
    if (s == "inball") return Certification::inball;
    throw ConfigInvalid("rule must be stopping_radius, hull or inball, got '" + s + "'");
}

// γ^(d): closed form in the plane, Monte Carlo otherwise
MeanSe gamma_d_reference(int d, double gamma, std::uint64_t seed) {
    if (d == 2) return {gamma_d_planar(gamma), 0.0, 0.0, 0};
    const auto g = gamma_d_estimate(d, gamma, 1000000, seed);
    return {g.value, g.se, 0.0, 1000000};
}

// Cells per unit volume counted in independent windows: an estimator of γ^(d)
// that shares nothing with the integral formula.
MeanSe density_estimate(const ProcessParams& p, std::size_t cells) {
    TypicalCellOptions o;
    o.rule = Certification::inball;
    o.window_side = 4.0;
    const auto s = sample_typical_cells(p, cells, o);
    return mean_se(s.cells_per_volume);
}

void add_count_rows(Table& t, double log_n, const std::vector<MarkedProcess>& runs) {
    for (std::size_t i = 0; i < runs.size(); ++i)
        t.add({log_n, static_cast<double>(i), static_cast<double>(runs[i].count()),
               static_cast<double>(runs[i].uncertified)});
}

Table& add_mark_table(Context& x, const std::vector<MarkedProcess>& runs, int d) {
    std::vector<std::string> h{"replicate"};
    for (int i = 1; i <= d; ++i) h.push_back("x_" + std::to_string(i));
    h.push_back("mark");
    auto& t = x.table("marks", h);
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (const auto& pt : runs[i].points) {
            std::vector<std::string> r{fmt17(static_cast<double>(i))};
            for (int k = 0; k < d; ++k) r.push_back(fmt17(pt.location[k]));
            r.push_back(fmt17(pt.mark));
            t.rows.push_back(std::move(r));
        }
    return t;
}

void report_multibin(Context& x, const std::vector<MarkedProcess>& runs, MarkKind kind, const Box& W, double c,
                     double gd) {
    try {
        const auto mb = multibin_poisson_test(runs, standard_bins(kind, W, c), gd);
        std::size_t bins_ok = 0, cov_ok = 0;
        for (const auto& b : mb.bins) bins_ok += b.pass;
        for (const auto& v : mb.covariances) cov_ok += v.pass;
        x.info("multibin_bins_within", static_cast<double>(bins_ok), static_cast<double>(mb.bins.size()));
        x.info("multibin_covariances_within", static_cast<double>(cov_ok), static_cast<double>(mb.covariances.size()));
        x.info("multibin_chi_square", mb.chi_square, static_cast<double>(mb.bins.size()));
        auto& t = x.table("multibin", {"bin", "mean", "expected", "se", "z"});
        for (std::size_t i = 0; i < mb.bins.size(); ++i) {
            const auto& b = mb.bins[i];
            t.add({static_cast<double>(i), b.mean, b.expected, b.se, b.z});
        }
    } catch (const InsufficientSamples&) {
        x.info("multibin_skipped", 1.0);
    }
}

// ---------------------------------------------------------------- experiments

void run_typical_cell_law(Context& x) {
    const auto& c = x.cfg;
    const std::size_t n = x.samples(10000);
    const auto radii = x.list("radii", {0.25, 0.5, 1.0});
    TypicalCellOptions o;
    o.rule = parse_rule(x.str("rule", "stopping_radius"));
    o.window_side = x.num("window_side", 1.0);
    const auto s = sample_typical_cells({c.gamma, c.d, c.seed}, n, o);
    const double m = static_cast<double>(s.cells.size());
    x.info("cells", m);
    x.info("realizations", static_cast<double>(s.realizations));
    x.info("uncertified", static_cast<double>(s.uncertified));
    x.info("first_pass_certified_fraction", s.first_pass_certified_fraction);
    auto& t = x.table("survival", {"R", "empirical", "exact", "se"});
    for (double R : radii) {
        const double k = static_cast<double>(
            std::count_if(s.cells.begin(), s.cells.end(), [&](const CellRecord& cr) { return cr.inradius > R; }));
        const double exact = std::exp(-2.0 * c.gamma * R);
        const double se = binomial_se(exact, s.cells.size());
        x.within("survival_R" + label(R), k / m, exact, se);
        t.add({R, k / m, exact, se});
    }
}

void run_gamma_d(Context& x) {
    const auto& c = x.cfg;
    const std::size_t n = x.samples(1000000);
    const auto g = gamma_d_estimate(c.d, c.gamma, n, c.seed);
    if (c.d == 2) x.within("gamma_d", g.value, gamma_d_planar(c.gamma), g.se);
    else x.info("gamma_d", g.value, kNaN, g.value - x.tol() * g.se, g.value + x.tol() * g.se);
    // Wendel: d+1 uniform directions span positively with probability 2^{-d}
    x.within("spanning_fraction", g.spanning_fraction, std::ldexp(1.0, -c.d), g.spanning_se);
    const std::size_t cells = x.count("density_cells", 10000);
    x.param("density_cells", cells);
    const auto b = density_estimate({c.gamma, c.d, derive_seed(c.seed, 1)}, cells);
    x.within("gamma_d_two_estimators", g.value - b.mean, 0.0, std::hypot(g.se, b.se));
    x.info("gamma_d_cell_density", b.mean, kNaN, b.mean - x.tol() * b.se, b.mean + x.tol() * b.se);
}

void run_zeta_limit(Context& x) {
    const auto& c = x.cfg;
    const ProcessParams p{c.gamma, c.d, c.seed};
    const Box W = window_of(c);
    const double cc = x.c_or(0.0);
    const std::size_t reps = x.replicates(2000);
    const double main_log = x.log_n_or({6.0}).front();
    auto trend = x.list("trend_n", {4, 6, 8});
    std::sort(trend.begin(), trend.end());
    x.param("trend_n", trend);
    const std::size_t resamples = x.count("resamples", 1000);

    // γ^(d) from the integral formula and from counted cell densities
    const std::size_t dens_samples = x.count("density_samples", 1000000);
    const std::size_t dens_cells = x.count("density_cells", 10000);
    x.param("density_samples", dens_samples);
    x.param("density_cells", dens_cells);
    const auto a = gamma_d_estimate(c.d, c.gamma, dens_samples, derive_seed(c.seed, 1));
    const auto b = density_estimate({c.gamma, c.d, derive_seed(c.seed, 2)}, dens_cells);
    x.within("gamma_d_two_estimators", a.value - b.mean, 0.0, std::hypot(a.se, b.se));
    double gd = a.value;
    if (c.d == 2) {
        gd = gamma_d_planar(c.gamma);
        x.within("gamma_d_integral", a.value, gd, a.se);
        x.within("gamma_d_cell_density", b.mean, gd, b.se);
    } else {
        x.info("gamma_d_integral", a.value, kNaN, a.value - x.tol() * a.se, a.value + x.tol() * a.se);
        x.info("gamma_d_cell_density", b.mean, kNaN, b.mean - x.tol() * b.se, b.mean + x.tol() * b.se);
    }
    const auto law = zeta_count_law(gd, W, cc);

    auto& counts = x.table("counts", {"log_n", "replicate", "count", "uncertified"});
    const auto runs = replicate_zeta(p, std::exp(main_log), W, cc, reps, c.seed);
    add_count_rows(counts, main_log, runs);
    const auto S = count_summary(runs);
    x.within("count_mean", S.mean, law.lambda, S.se);
    x.within("fano", S.fano, 1.0, S.fano_se);
    const double pks = mark_law_pvalue(runs);
    x.check("mark_ks_pvalue", pks, pks > 0.0027, kNaN, 0.0027, 1.0);
    x.check("uncertified_fraction", S.uncertified_fraction, S.uncertified_fraction < 0.1, kNaN, 0.0, 0.1);
    report_multibin(x, runs, MarkKind::zeta, W, cc, gd);
    add_mark_table(x, runs, c.d);

    // count TV against the limit law along the n grid
    auto& tvt = x.table("tv", {"log_n", "tv", "bias_corrected", "ci_low", "ci_high"});
    bool trend_ok = true;
    double prev_high = kNaN;
    for (std::size_t k = 0; k < trend.size(); ++k) {
        std::vector<long> cts;
        if (trend[k] == main_log) {
            cts = S.counts;
        } else {
            const auto rk = replicate_zeta(p, std::exp(trend[k]), W, cc, reps, derive_seed(c.seed, 100 + k));
            add_count_rows(counts, trend[k], rk);
            cts = count_summary(rk).counts;
        }
        const auto tv = count_tv(cts, law, resamples, derive_seed(c.seed, 200 + k));
        x.info("tv_log_n" + label(trend[k]), tv.bias_corrected, 0.0, tv.ci_low, tv.ci_high);
        tvt.add({trend[k], tv.tv, tv.bias_corrected, tv.ci_low, tv.ci_high});
        if (k > 0 && tv.bias_corrected > prev_high) trend_ok = false;
        prev_high = tv.ci_high;
    }
    x.check("tv_non_increasing", trend_ok ? 1.0 : 0.0, trend_ok, 1.0);
}

void run_xi_limit(Context& x) {
    const auto& c = x.cfg;
    const ProcessParams p{c.gamma, c.d, c.seed};
    const Box W = window_of(c);
    const double cc = x.c_or(2.0);
    const std::size_t reps = x.replicates(5000);
    const double main_log = x.log_n_or({6.0}).front();
    const auto sigma = size_functional(c.sigma, c.d);

    GCorpusOptions go;
    go.cells = x.count("corpus_cells", 1000000);
    go.window_side = x.num("corpus_window", 5.0);
    go.seed = static_cast<std::uint64_t>(x.num("corpus_seed", static_cast<double>(go.seed)));
    go.sigma = sigma;
    const std::string def_path =
        (fs::path(c.output_dir) / ("g_corpus_" + std::string(sigma.name()) + "_d" + std::to_string(c.d) + ".csv"))
            .string();
    const std::string path = x.str("corpus", def_path);
    x.param("corpus", path);
    x.param("corpus_cells", go.cells);
    const auto F = load_or_fit_g_corpus(path, {c.gamma, c.d, go.seed}, go);
    const GTransform G(F);
    x.info("corpus_size", static_cast<double>(F.n()));

    const MeanSe gref = gamma_d_reference(c.d, c.gamma, derive_seed(c.seed, 1));
    const auto law = xi_count_law(gref.mean, W, cc);
    const auto runs = replicate_xi(p, std::exp(main_log), W, cc, sigma, G, reps, c.seed);
    auto& counts = x.table("counts", {"log_n", "replicate", "count", "uncertified"});
    add_count_rows(counts, main_log, runs);
    const auto S = count_summary(runs);
    x.within("count_mean", S.mean, law.lambda, std::hypot(S.se, gref.se * law.lambda / gref.mean));
    const auto ratio = mark_survival_ratio(runs, 2 * cc, 4 * cc);
    x.within("pareto_ratio", ratio.ratio, ratio.expected, ratio.se);
    x.check("uncertified_fraction", S.uncertified_fraction, S.uncertified_fraction < 0.1, kNaN, 0.0, 0.1);
    x.info("fano", S.fano, 1.0, S.fano - x.tol() * S.fano_se, S.fano + x.tol() * S.fano_se);
    x.info("mark_ks_pvalue", mark_law_pvalue(runs));
    report_multibin(x, runs, MarkKind::xi, W, cc, gref.mean);
    add_mark_table(x, runs, c.d);

    if (F.n() >= 1000000 && sigma.tau > 0) {
        try {
            const auto as = g_inverse_asymptote_check(G, c.gamma, sigma);
            auto& t = x.table("asymptote", {"log_n", "g_inverse", "ratio", "ci_low", "ci_high"});
            for (const auto& r : as.rows) {
                t.add({r.log_n, r.g_inverse, r.ratio, r.ci_low, r.ci_high});
                x.info("asymptote_log_n" + label(r.log_n), r.ratio, as.target, r.ci_low, r.ci_high);
            }
            x.info("asymptote_final_within", as.final_within, 1.0);
            x.info("asymptote_monotone", as.monotone, 1.0);
        } catch (const OutOfRange&) {
            x.info("asymptote_skipped", 1.0);
        }
    }
}

void run_integrals(Context& x) {
    const auto& c = x.cfg;
    auto& nt = x.table("normalization", {"d", "value"});
    double worst = 0.0;
    for (int d = 2; d <= 8; ++d) {
        const double v = slice_integral(d, -1.0, 1.0);
        nt.add({static_cast<double>(d), v});
        worst = std::max(worst, std::fabs(v - 1.0));
    }
    x.check("normalization_max_error", worst, worst <= 1e-12, 0.0, 0.0, 1e-12);

    const std::size_t configs = x.count("configs", 100);
    x.param("configs", configs);
    auto& pt = x.table("pair_hit", {"z_1", "z_2", "z_3", "r", "w_1", "w_2", "w_3", "s", "quadrature", "closed_form",
                                    "abs_error"});
    Rng rng(c.seed, 7);
    double pair_worst = 0.0;
    for (std::size_t k = 0; k < configs;) {
        Vector z(3), w(3);
        for (int i = 0; i < 3; ++i) {
            z[i] = rng.uniform(-2.0, 2.0);
            w[i] = rng.uniform(-2.0, 2.0);
        }
        const double r = rng.uniform(0.05, 1.0), s = rng.uniform(0.05, 1.0);
        if (r + s > (w - z).norm()) continue;
        const double q = pair_hit_measure(z, r, w, s), e = pair_hit_measure_d3(z, r, w, s);
        pair_worst = std::max(pair_worst, std::fabs(q - e));
        pt.add({z[0], z[1], z[2], r, w[0], w[1], w[2], s, q, e, std::fabs(q - e)});
        ++k;
    }
    x.check("pair_hit_d3_max_error", pair_worst, pair_worst <= 1e-9, 0.0, 0.0, 1e-9);

    const double l2 = L_of_a(1.0, 2), l3 = L_of_a(1.0, 3);
    x.check("L1_d2", l2, std::fabs(l2 - 2.0 / 3.0) <= 1e-10, 2.0 / 3.0);
    x.check("L1_d3", l3, std::fabs(l3 - 0.75) <= 1e-10, 0.75);
}

void run_delta_star(Context& x) {
    const auto& c = x.cfg;
    std::vector<int> dims;
    if (c.d_given) dims.push_back(c.d);
    else
        for (int d = 2; d <= 10; ++d) dims.push_back(d);
    auto& t = x.table("delta_star", {"d", "delta_star", "residual", "iterations"});
    for (int d : dims) {
        const auto r = delta_star(d);
        t.add({static_cast<double>(d), r.delta_star, r.residual, static_cast<double>(r.iterations)});
        const std::string sfx = "_d" + std::to_string(d);
        if (d == 3) {
            const double closed = (std::sqrt(11.0) - 3.0) / 2.0;
            x.check("delta_star" + sfx, r.delta_star,
                    std::fabs(r.delta_star - closed) <= 1e-12 && r.delta_star > 0 && r.delta_star < 1.0 / 3, closed);
        } else {
            x.check("delta_star" + sfx, r.delta_star, r.delta_star > 0 && r.delta_star < 1.0 / d, kNaN, 0.0, 1.0 / d);
        }
        x.check("residual" + sfx, r.residual, r.residual <= 1e-12, 0.0, 0.0, 1e-12);
    }
}

void run_bp_check(Context& x) {
    const auto& c = x.cfg;
    const std::size_t n = x.samples(1000000);
    const auto ells = x.list("ell", c.d == 2 ? std::vector<double>{1, 2} : std::vector<double>{1});
    x.param("ell", ells);
    const auto f = bp_box_indicator(c.d);
    auto& t = x.table("bp", {"ell", "lhs", "lhs_se", "rhs", "rhs_se", "sigma"});
    for (double le : ells) {
        const int ell = static_cast<int>(le);
        if (ell != le) throw ConfigInvalid("ell must be an integer");
        const auto r = bp_verify(ell, c.d, f, n, derive_seed(c.seed, ell));
        t.add({le, r.lhs, r.lhs_se, r.rhs, r.rhs_se, r.sigma});
        const std::string sfx = "_ell" + std::to_string(ell);
        x.within("difference" + sfx, r.lhs - r.rhs, 0.0, r.sigma);
        // the box indicator integrates to 12/pi in the plane (unit intensity)
        const double target = c.d == 2 ? 12.0 / std::numbers::pi : kNaN;
        x.info("lhs" + sfx, r.lhs, target, r.lhs - x.tol() * r.lhs_se, r.lhs + x.tol() * r.lhs_se);
        x.info("rhs" + sfx, r.rhs, target, r.rhs - x.tol() * r.rhs_se, r.rhs + x.tol() * r.rhs_se);
    }
}

void run_btr(Context& x) {
    const auto& c = x.cfg;
    if (c.d != 2) throw DimensionUnsupported("btR uses equal planar sectors (d = 2)");
    const std::size_t n = x.samples(10000);
    const double r = x.num("inradius", 1.0), alpha = x.num("alpha", std::numbers::pi / 12.0);
    const int grid = static_cast<int>(x.count("grid_points", 10));
    x.param("inradius", r);
    x.param("alpha", alpha);
    const auto rows = btr_experiment(c.gamma, r, alpha, n, c.seed, grid);
    auto& t = x.table("btr", {"u", "empirical", "exact", "se"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const double se = binomial_se(row.exact, n);
        t.add({row.u, row.empirical, row.exact, se});
        const double h = x.tol() * se + 1e-12;
        x.check("survival_u" + std::to_string(i), row.empirical, std::fabs(row.empirical - row.exact) <= h, row.exact,
                row.empirical - h, row.empirical + h);
    }
}

void run_stopping_property(Context& x) {
    const auto& c = x.cfg;
    const std::size_t trials_target = x.samples(10000);
    const std::size_t cells_target = x.count("cells", 1000);
    const double alpha = x.num("alpha", std::numbers::pi / 12.0);
    // typical R is about 47 at gamma = 1; the region must hold the stopping balls
    const double region = x.num("region", 120.0 / c.gamma);
    x.param("cells", cells_target);
    x.param("alpha", alpha);
    const auto cs = build_cone_system(c.d, alpha);
    const ProcessParams p{c.gamma, c.d, c.seed};
    const Ball inner{Vector::Zero(c.d), 10.0 / c.gamma};
    const Box win{Vector::Constant(c.d, -2.0 / c.gamma), Vector::Constant(c.d, 2.0 / c.gamma)};

    std::size_t trials = 0, seen = 0, finite = 0, equiv_fail = 0, mono_fail = 0, restrict_fail = 0;
    for (std::uint64_t s = 0; trials < trials_target; ++s) {
        Rng rng(c.seed, s);
        // cells come from the inner ball; hyperplanes of the shell cannot reach their inballs
        auto w = sample(p, inner, rng);
        const auto cells = extract_cells(w, win);
        extend(w, region, rng);
        for (const auto& cell : cells) {
            const auto rec = stopping_radius(cell.inball(), w.hyperplanes, cs);
            ++seen;
            if (!std::isfinite(rec.R) || rec.R > region) continue;
            ++finite;
            const auto restricted = restrict_to_hitting(w.hyperplanes, {cell.center, rec.R});
            restrict_fail += stopping_radius(cell.inball(), restricted, cs).R != rec.R;
            for (int k = 0; k < 5; ++k) {
                const double q = rng.uniform(cell.inradius, 2.0 * std::min(rec.R, region - 1.0));
                equiv_fail += !stopping_set_property_test(cell.inball(), w.hyperplanes, cs, q);
                ++trials;
            }
            auto more = w.hyperplanes;
            Vector u;
            rng.unit_vector(u, c.d);
            more.push_back({u, cell.center.dot(u) + rng.uniform(cell.inradius * 1.01, 10.0 / c.gamma)});
            mono_fail += stopping_radius(cell.inball(), more, cs).R > rec.R;
        }
    }
    x.info("cells_examined", static_cast<double>(seen));
    x.info("finite_fraction", static_cast<double>(finite) / static_cast<double>(std::max<std::size_t>(seen, 1)));
    x.check("equivalence_failures", static_cast<double>(equiv_fail), equiv_fail == 0, 0.0);
    x.info("equivalence_trials", static_cast<double>(trials));
    x.check("monotonicity_failures", static_cast<double>(mono_fail), mono_fail == 0, 0.0);
    x.check("restriction_failures", static_cast<double>(restrict_fail), restrict_fail == 0, 0.0);

    // the stopping ball alone determines the polytope
    auto& t = x.table("cell_determination", {"cell", "vertices", "max_vertex_deviation"});
    std::size_t checked = 0, count_mismatch = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; checked < cells_target; ++s) {
        Rng rng(derive_seed(c.seed, 3), s);
        auto w = sample(p, inner, rng);
        auto cells = extract_cells(w, win);
        extend(w, region, rng);
        for (auto cell : cells) {
            if (checked >= cells_target) break;
            cell = certify_cell(cell, w, cs);
            if (!cell.certified) continue;
            attach_body(cell, w);
            const auto near = restrict_to_hitting(w.hyperplanes, {cell.center, *cell.stopping_radius});
            std::vector<Hyperplane> tuple, others;
            for (int k : cell.tuple) tuple.push_back(w.hyperplanes[k]);
            for (const auto& h : near) {
                bool in_tuple = false;
                for (const auto& tp : tuple) in_tuple |= (tp.u - h.u).norm() == 0 && tp.r == h.r;
                if (!in_tuple) others.push_back(h);
            }
            const auto P = cell_polytope(tuple, others);
            double dev = 0.0;
            if (P.vertices.size() != cell.body->vertices.size()) {
                ++count_mismatch;
                dev = kInf;
            } else {
                for (const auto& v : cell.body->vertices) {
                    double best = kInf;
                    for (const auto& y : P.vertices) best = std::min(best, (y - v).norm());
                    dev = std::max(dev, best);
                }
            }
            worst = std::max(worst, dev);
            t.add({static_cast<double>(checked), static_cast<double>(cell.body->vertices.size()), dev});
            ++checked;
        }
    }
    x.info("cells_determined", static_cast<double>(checked));
    x.check("vertex_count_mismatches", static_cast<double>(count_mismatch), count_mismatch == 0, 0.0);
    x.check("max_vertex_deviation", worst, worst <= 1e-9, 0.0, 0.0, 1e-9);
}

void run_decorrelation(Context& x) {
    const auto& c = x.cfg;
    if (c.d != 2) throw DimensionUnsupported("decorrelation is implemented for d = 2");
    DecorrelationOptions o;
    o.gamma = c.gamma;
    o.u_threshold = x.num("u", 10.0);
    o.distances = x.list("distances", {4, 6, 8, 10});
    o.replicates = x.replicates(50000);
    o.seed = c.seed;
    o.alpha = x.num("alpha", std::numbers::pi / 12.0);
    o.neighborhood = x.num("neighborhood", 1.0);
    o.primed_slack = x.num("slack", 8.0);
    o.sigma = size_functional(c.sigma, c.d);
    x.param("u", o.u_threshold);
    x.param("distances", o.distances);
    x.param("slack", o.primed_slack);
    const auto res = decorrelation_experiment(o);
    auto& t = x.table("decorrelation", {"distance", "ratio", "ci_low", "ci_high"});
    for (const auto& r : res.rows) {
        t.add({r.distance, r.ratio, r.ci_low, r.ci_high});
        x.info("ratio_distance" + label(r.distance), r.ratio, kNaN, r.ci_low, r.ci_high);
        x.info("p_a_distance" + label(r.distance), r.p_a);
    }
    x.check("far_ratio_bounded", res.rows.back().ratio, res.far_bounded, 2.0, res.rows.back().ci_low,
            res.rows.back().ci_high);
    x.check("non_increasing", res.non_increasing, res.non_increasing, 1.0);
    x.info("far_ratio_above_one", res.far_lower, 1.0);
}

void run_kendall(Context& x) {
    const auto& c = x.cfg;
    KendallOptions o;
    o.samples = x.samples(100000);
    o.quantiles = x.list("quantiles", o.quantiles);
    o.theta_level = x.num("theta_level", o.theta_level);
    o.sigma = size_functional(c.sigma, c.d);
    if (x.has("u_grid")) o.u_grid = x.list("u_grid", {});
    TypicalCellOptions to;
    to.rule = Certification::hull;
    to.with_body = true;
    to.sigma = o.sigma;
    const auto sample = sample_typical_cells({c.gamma, c.d, c.seed}, o.samples, to);
    const auto res = kendall_experiment(sample.cells, o);
    auto& t = x.table("kendall", {"u", "count", "mean_theta", "se", "p_theta", "p_se"});
    for (const auto& r : res.rows) {
        t.add({r.u, static_cast<double>(r.count), r.mean_theta, r.se, r.p_theta, r.p_se});
        x.info("mean_theta_u" + label(r.u), r.mean_theta, kNaN, r.mean_theta - x.tol() * r.se,
               r.mean_theta + x.tol() * r.se);
    }
    x.info("unconditional_mean_theta", res.unconditional_mean);
    x.check("strictly_decreasing", res.strictly_decreasing, res.strictly_decreasing, 1.0);
    x.info("p_theta_decreasing", res.p_decreasing, 1.0);

    const std::size_t iso_n = std::min(x.count("iso_cells", 1000), sample.cells.size());
    x.param("iso_cells", iso_n);
    const std::vector<CellRecord> head(sample.cells.begin(), sample.cells.begin() + static_cast<long>(iso_n));
    const auto iso = isoperimetric_check(head, o.sigma, x.num("slack", 1e-9));
    x.check("isoperimetric_violations", static_cast<double>(iso.violations), iso.violations == 0 && iso.checked == iso_n,
            0.0);
    x.info("isoperimetric_min_ratio", iso.min_ratio, 1.0);
}

void run_decay_le1(Context& x) {
    const auto& c = x.cfg;
    if (c.d != 2) throw DimensionUnsupported("decay integrals are implemented for d = 2");
    const std::string v = x.str("variant", "both");
    std::vector<char> variants;
    if (v == "a" || v == "both") variants.push_back('a');
    if (v == "b" || v == "both") variants.push_back('b');
    if (variants.empty()) throw ConfigInvalid("variant must be a, b or both");
    const std::size_t n = x.samples(200000);
    const double a = x.num("a", 1.0 / 3.0), dfac = x.num("d_factor", 0.0), tol = x.num("slope_tolerance", 0.2);
    const auto grid_a = x.list("grid_a", {4, 5, 6, 7, 8, 9, 10, 11, 12});
    const auto grid_b = x.list("grid_b", {8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24});
    x.param("a", a);
    x.param("grid_a", grid_a);
    x.param("grid_b", grid_b);
    auto& t = x.table("decay", {"variant", "R", "estimate", "se"});
    for (char var : variants) {
        const auto r = decay_check_le1(var, var == 'a' ? grid_a : grid_b, n, derive_seed(c.seed, var), c.gamma, a,
                                       dfac, tol);
        for (const auto& pt : r.table)
            t.rows.push_back({std::string(1, var), fmt17(pt.R), fmt17(pt.estimate), fmt17(pt.se)});
        x.check(std::string("slope_") + var, r.fit.slope, r.within_band, r.target_slope, r.target_slope - r.tolerance,
                r.target_slope + r.tolerance);
        x.info(std::string("slope_se_") + var, r.fit.slope_se);
    }
}

void run_e_terms(Context& x) {
    const auto& c = x.cfg;
    if (c.d != 2) throw DimensionUnsupported("E-terms are implemented for d = 2");
    const auto logs = x.log_n_or({4, 6});
    const double cc = x.c_or(0.0);
    const std::size_t n = x.samples(20000);
    const Box W = window_of(c);
    auto& t = x.table("e_terms", {"log_n", "term", "estimate", "sigma", "split_high", "split_low"});
    std::uint64_t salt = 0;
    for (double L : logs)
        for (ETerm term : {ETerm::E2, ETerm::E5, ETerm::E6}) {
            const auto r = e_term_estimate(term, std::exp(L), cc, W, n, derive_seed(c.seed, ++salt), c.gamma);
            t.rows.push_back({fmt17(L), e_term_name(term), fmt17(r.estimate), fmt17(r.sigma), fmt17(r.split_high),
                              fmt17(r.split_low)});
            const std::string name = std::string(e_term_name(term)) + "_log_n" + label(L);
            // a pair integral is non-negative; anything below is noise or a bug
            x.check(name, r.estimate, r.estimate >= -x.tol() * r.sigma, kNaN, r.estimate - x.tol() * r.sigma,
                    r.estimate + x.tol() * r.sigma);
        }
}

struct ExperimentDef {
    const char* name;
    std::vector<std::string> keys;
    void (*fn)(Context&);
};

const std::vector<ExperimentDef>& registry() {
    static const std::vector<ExperimentDef> defs{
        {"typical-cell-law", {"radii", "rule", "window_side"}, run_typical_cell_law},
        {"gamma-d", {"density_cells"}, run_gamma_d},
        {"zeta-limit", {"trend_n", "resamples", "density_samples", "density_cells"}, run_zeta_limit},
        {"xi-limit", {"corpus", "corpus_cells", "corpus_window", "corpus_seed"}, run_xi_limit},
        {"integrals", {"configs"}, run_integrals},
        {"delta-star", {}, run_delta_star},
        {"bp-check", {"ell"}, run_bp_check},
        {"btR", {"inradius", "alpha", "grid_points"}, run_btr},
        {"stopping-property", {"cells", "alpha", "region"}, run_stopping_property},
        {"decorrelation", {"u", "distances", "alpha", "neighborhood", "slack"}, run_decorrelation},
        {"kendall", {"quantiles", "theta_level", "u_grid", "iso_cells", "slack"}, run_kendall},
        {"decay-le1", {"variant", "a", "d_factor", "slope_tolerance", "grid_a", "grid_b"}, run_decay_le1},
        {"e-terms", {}, run_e_terms},
    };
    return defs;
}

const ExperimentDef& find_def(const std::string& name) {
    for (const auto& d : registry())
        if (name == d.name) return d;
    std::string known;
    for (const auto& d : registry()) known += std::string(known.empty() ? "" : ", ") + d.name;
    throw ConfigInvalid("unknown experiment '" + name + "' (known: " + known + ")");
}

// same error type, message prefixed with the experiment
[[noreturn]] void rethrow_in(const std::string& experiment, const Error& e) {
    std::string msg = e.what();
    const std::string kind = e.kind();
    if (msg.rfind(kind + ": ", 0) == 0) msg = msg.substr(kind.size() + 2);
    msg = experiment + ": " + msg;
#define HM_RETHROW(T) \
    if (kind == #T) throw T(msg);
    HM_RETHROW(NotGeneralPosition)
    HM_RETHROW(Unbounded)
    HM_RETHROW(DimensionUnsupported)
    HM_RETHROW(DegeneratePolytope)
    HM_RETHROW(InballHit)
    HM_RETHROW(QuadratureNotConverged)
    HM_RETHROW(PreconditionViolated)
    HM_RETHROW(InsufficientSamples)
    HM_RETHROW(CertificationStarvation)
    HM_RETHROW(OutOfRange)
    HM_RETHROW(WindowNotContained)
    HM_RETHROW(CoverageFailure)
    HM_RETHROW(NoRoot)
    HM_RETHROW(ConfigInvalid)
#undef HM_RETHROW
    throw;
}

json config_echo(const ExperimentConfig& c) {
    json p;
    p["d"] = c.d;
    p["gamma"] = c.gamma;
    if (!c.log_n.empty()) p["log_n"] = c.log_n;
    if (!std::isnan(c.c)) p["c"] = c.c;
    if (!c.window.empty()) p["window"] = c.window;
    p["sigma"] = c.sigma;
    if (c.replicates) p["replicates"] = c.replicates;
    if (c.samples) p["samples"] = c.samples;
    p["tolerance_sigma"] = c.tolerance_sigma;
    if (!c.tag.empty()) p["tag"] = c.tag;
    for (const auto& [k, v] : c.extra) p[k] = v;
    return p;
}

std::string base_name(const ExperimentConfig& c) { return c.tag.empty() ? c.experiment : c.experiment + "_" + c.tag; }

}  // namespace

KeyValues parse_key_values(std::istream& is) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigInvalid("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = normalize_key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigInvalid("line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigInvalid("cannot open config file " + path);
    return parse_key_values(is);
}

KeyValues merge(const KeyValues& base, const KeyValues& over) {
    KeyValues out = base;
    for (const auto& [k, v] : over) out[normalize_key(k)] = v;
    return out;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& d : registry()) n.push_back(d.name);
        return n;
    }();
    return names;
}

ExperimentConfig make_config(const std::string& experiment, const KeyValues& kv_in) {
    const auto& def = find_def(experiment);
    ExperimentConfig c;
    c.experiment = experiment;
    KeyValues kv;
    for (const auto& [k, v] : kv_in) kv[normalize_key(k)] = v;
    for (const auto& [k, v] : kv) {
        if (k == "experiment") {
            if (v != experiment) invalid(k, v, "config is for a different experiment");
        } else if (k == "tag") {
            if (v.find_first_of("/\\") != std::string::npos) invalid(k, v, "tag must not contain path separators");
            c.tag = v;
        } else if (k == "d") {
            c.d = static_cast<int>(parse_integer(k, v, 2));
            if (c.d > 10) invalid(k, v, "d must be in 2..10");
            c.d_given = true;
        } else if (k == "gamma") {
            c.gamma = parse_double(k, v);
            if (!(c.gamma > 0) || !std::isfinite(c.gamma)) invalid(k, v, "gamma must be positive");
        } else if (k == "n") {
            c.log_n.clear();
            for (const auto& tok : split_list(v)) c.log_n.push_back(parse_log_n(k, tok));
            if (c.log_n.empty()) invalid(k, v, "empty list");
        } else if (k == "c") {
            c.c = parse_double(k, v);
            if (!std::isfinite(c.c)) invalid(k, v, "c must be finite");
        } else if (k == "window") {
            c.window = parse_list(k, v);
        } else if (k == "sigma") {
            if (v != "volume" && v != "surface_area" && v != "surface") invalid(k, v, "volume or surface_area");
            c.sigma = v == "surface" ? "surface_area" : v;
        } else if (k == "replicates") {
            c.replicates = static_cast<std::size_t>(parse_integer(k, v, 1));
        } else if (k == "samples") {
            c.samples = static_cast<std::size_t>(parse_integer(k, v, 1));
        } else if (k == "seed") {
            const std::string t = trim(v);
            if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) invalid(k, v, "unsigned integer");
            try {
                c.seed = std::stoull(t);
            } catch (const std::exception&) {
                invalid(k, v, "out of range");
            }
        } else if (k == "output_dir") {
            if (v.empty()) invalid(k, v, "empty path");
            c.output_dir = v;
        } else if (k == "tolerance_sigma") {
            c.tolerance_sigma = parse_double(k, v);
            if (!(c.tolerance_sigma > 0)) invalid(k, v, "must be positive");
        } else if (k == "threads") {
            c.threads = static_cast<unsigned>(parse_integer(k, v, 0));
        } else if (std::find(def.keys.begin(), def.keys.end(), k) != def.keys.end()) {
            c.extra[k] = v;
        } else {
            invalid(k, v, "not a setting of " + experiment);
        }
    }
    if (!c.window.empty() && static_cast<int>(c.window.size()) != 2 * c.d)
        throw ConfigInvalid("window needs " + std::to_string(2 * c.d) + " numbers for d = " + std::to_string(c.d));
    if (!c.window.empty()) window_of(c);
    return c;
}

json ExperimentReport::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["version"] = kVersion;
    j["params"] = params;
    j["seed"] = seed;
    if (params.contains("log_n")) {
        json n = json::array();
        for (const auto& l : params.at("log_n")) n.push_back(std::exp(l.get<double>()));
        j["n"] = n;
    }
    if (params.contains("replicates")) j["replicates"] = params.at("replicates");
    json est = json::object(), tgt = json::object(), ci = json::object(), checks = json::object();
    for (const auto& m : metrics) {
        est[m.name] = m.estimate;
        if (!std::isnan(m.target)) tgt[m.name] = m.target;
        if (!std::isnan(m.ci_low) || !std::isnan(m.ci_high)) ci[m.name] = {m.ci_low, m.ci_high};
        if (m.gated) checks[m.name] = m.pass;
    }
    j["estimates"] = est;
    j["targets"] = tgt;
    j["ci"] = ci;
    j["checks"] = checks;
    j["pass"] = pass;
    j["files"] = files;
    j["wall_clock_seconds"] = wall_seconds;
    return j;
}

ExperimentReport run(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& def = find_def(config.experiment);
    set_thread_count(config.threads);
    ExperimentReport rep;
    rep.experiment = config.experiment;
    rep.seed = config.seed;
    rep.params = config_echo(config);
    Context x{config, rep, {}};
    try {
        def.fn(x);
    } catch (const Error& e) {
        rethrow_in(config.experiment, e);
    }
    rep.pass = std::all_of(rep.metrics.begin(), rep.metrics.end(), [](const Metric& m) { return !m.gated || m.pass; });

    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    const std::string base = base_name(config);
    for (const auto& t : x.tables) {
        const std::string file = base + "_" + t.name + ".csv";
        write_table(dir / file, t);
        rep.files.push_back(file);
    }
    rep.files.push_back(base + ".json");
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream os(dir / (base + ".json"), std::ios::binary);
    if (!os) throw ConfigInvalid("cannot write report in " + dir.string());
    os << rep.to_json().dump(2) << "\n";
    return rep;
}

namespace {

struct CriterionPlan {
    int id;
    const char* title;
    std::vector<std::pair<std::string, KeyValues>> runs;
};

std::vector<CriterionPlan> plans(bool full, const std::string& dir) {
    auto sz = [&](const char* f, const char* q) { return std::string(full ? f : q); };
    const std::string corpus = (fs::path(dir) / (full ? "g_corpus_volume_d2.csv" : "g_corpus_volume_d2_quick.csv")).string();
    return {
        {1,
         "typical-cell inradius law",
         {{"typical-cell-law", {{"gamma", "1"}, {"samples", sz("10000", "3000")}, {"tag", "gamma1"}}},
          {"typical-cell-law", {{"gamma", "2"}, {"samples", sz("10000", "3000")}, {"tag", "gamma2"}}}}},
        {2, "delta-star solver", {{"delta-star", {}}}},
        {3, "integral identities", {{"integrals", {}}}},
        {4, "two-sided integral identity", {{"bp-check", {{"samples", sz("1000000", "100000")}}}}},
        {5,
         "zeta_n limit",
         {{"zeta-limit",
           {{"n", "e6"}, {"c", "0"}, {"replicates", sz("2000", "400")}, {"density_cells", sz("10000", "2000")},
            {"density_samples", sz("1000000", "200000")}}}}},
        {6,
         "xi_n limit",
         {{"xi-limit",
           {{"n", "e6"}, {"c", "2"}, {"replicates", sz("5000", "800")}, {"corpus", corpus},
            {"corpus_cells", sz("1000000", "100000")}}}}},
        {7,
         "stopping machinery",
         {{"btR", {{"samples", sz("10000", "4000")}}},
          {"stopping-property", {{"samples", sz("10000", "1000")}, {"cells", sz("1000", "100")}}}}},
        {8,
         "decorrelation",
         {{"decorrelation", {{"replicates", sz("50000", "10000")}, {"distances", full ? "4,6,8,10" : "4,10"}}}}},
        {9, "shape concentration", {{"kendall", {{"samples", sz("100000", "20000")}}}}},
        {10,
         "decay rates",
         {{"decay-le1",
           {{"samples", sz("200000", "50000")}, {"grid_a", full ? "4:12" : "4:10:2"},
            {"grid_b", full ? "8:24" : "8:24:4"}}}}},
    };
}

std::string summarize(const ExperimentReport& r) {
    std::size_t gated = 0, ok = 0;
    std::string failing;
    for (const auto& m : r.metrics) {
        if (!m.gated) continue;
        ++gated;
        if (m.pass) {
            ++ok;
        } else {
            char buf[160];
            std::snprintf(buf, sizeof buf, " %s=%.6g", m.name.c_str(), m.estimate);
            failing += buf;
            if (!std::isnan(m.target)) {
                std::snprintf(buf, sizeof buf, " (target %.6g)", m.target);
                failing += buf;
            }
        }
    }
    std::string s = r.experiment + " " + std::to_string(ok) + "/" + std::to_string(gated);
    if (!failing.empty()) s += " failing:" + failing;
    return s;
}

}  // namespace

std::vector<CriterionResult> verify_all(bool full, const std::string& output_dir, std::ostream* log) {
    std::vector<CriterionResult> out;
    for (const auto& plan : plans(full, output_dir)) {
        CriterionResult cr;
        cr.id = plan.id;
        cr.title = plan.title;
        cr.pass = true;
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& [exp, kv] : plan.runs) {
            KeyValues all = kv;
            all["output_dir"] = output_dir;
            if (!all.count("seed")) all["seed"] = std::to_string(1000 + plan.id);
            try {
                auto rep = run(make_config(exp, all));
                cr.pass = cr.pass && rep.pass;
                cr.detail += (cr.detail.empty() ? "" : "; ") + summarize(rep);
                cr.reports.push_back(std::move(rep));
            } catch (const Error& e) {
                cr.pass = false;
                cr.detail += (cr.detail.empty() ? "" : "; ") + std::string(e.what());
            }
        }
        cr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (log) {
            char head[64];
            std::snprintf(head, sizeof head, "%s criterion %2d ", cr.pass ? "PASS" : "FAIL", cr.id);
            char tail[32];
            std::snprintf(tail, sizeof tail, " [%.1f s]", cr.seconds);
            *log << head << cr.title << ": " << cr.detail << tail << std::endl;
        }
        out.push_back(std::move(cr));
    }
    return out;
}

}  // namespace hypermosaic::cli
