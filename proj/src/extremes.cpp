#include "hypermosaic/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "hypermosaic/parallel.hpp"
#include "hypermosaic/stats.hpp"

namespace hypermosaic {

namespace {

Box scaled_box(const Box& W, double s) { return {W.lo * s, W.hi * s}; }

void check_uncertified(std::span<const MarkedProcess> runs) {
    std::size_t examined = 0, bad = 0;
    for (const auto& r : runs) {
        examined += r.cells_examined;
        bad += r.uncertified;
    }
    if (examined >= 20 && bad * 10 >= examined)
        throw CertificationStarvation("10% or more of the window cells stayed uncertified");
}

double box_volume_clipped(const Box& A) { return std::max(0.0, (A.hi - A.lo).cwiseMax(0.0).prod()); }

}  // namespace

std::size_t MarkedProcess::count_in(const Box& A, double y1, double y2) const {
    std::size_t k = 0;
    for (const auto& p : points)
        k += A.contains(p.location) && p.mark > y1 && p.mark <= y2;
    return k;
}

double gamma_d_planar(double gamma) { return gamma * gamma / std::numbers::pi; }

CountLaw zeta_count_law(double gamma_d, const Box& W, double c) { return {gamma_d * W.volume() * std::exp(-c)}; }

CountLaw xi_count_law(double gamma_d, const Box& W, double c) {
    if (!(c > 0)) throw PreconditionViolated("xi threshold must be positive");
    return {gamma_d * W.volume() / c};
}

MarkedProcess build_zeta_n(const ProcessParams& p, double n, const Box& W, double c, Rng& rng) {
    p.validate();
    if (W.dim() != p.d) throw PreconditionViolated("window dimension differs from d");
    if (!(n > 0) || !(c + std::log(n) > 0)) throw PreconditionViolated("need n > e^{-c}");
    const double s = std::pow(n, 1.0 / p.d);
    WindowOptions wo;
    wo.rule = Certification::inball;
    wo.min_inradius = (c + std::log(n)) / (2.0 * p.gamma);
    auto wc = window_cells(p, scaled_box(W, s), wo, rng);

    MarkedProcess out;
    out.n = n;
    out.kind = MarkKind::zeta;
    out.window = W;
    out.c = c;
    for (const auto& cell : wc.cells) {
        ++out.cells_examined;
        if (!cell.certified) {
            ++out.uncertified;
            continue;
        }
        const double mark = 2.0 * p.gamma * cell.inradius - std::log(n);
        if (mark > c) out.points.push_back({cell.center / s, mark});
    }
    return out;
}

MarkedProcess build_xi_n(const ProcessParams& p, double n, const Box& W, double c, const SizeFunctional& sigma,
                         const GTransform& G, Rng& rng) {
    p.validate();
    if (W.dim() != p.d) throw PreconditionViolated("window dimension differs from d");
    if (!(n > 0) || !(c > 0)) throw PreconditionViolated("need n > 0 and c > 0");
    if (G.distribution().n() < 100000) throw PreconditionViolated("G must be fitted on at least 1e5 cells");
    const double floor = G.inverse(n * c);
    const double s = std::pow(n, 1.0 / p.d);
    WindowOptions wo;
    wo.rule = Certification::hull;
    wo.with_body = true;
    wo.sigma = sigma;
    // smaller cells have G(Σ) < n c; the observed size only shrinks later
    wo.size_floor = floor * (1.0 - 1e-12);
    auto wc = window_cells(p, scaled_box(W, s), wo, rng);

    MarkedProcess out;
    out.n = n;
    out.kind = MarkKind::xi;
    out.window = W;
    out.c = c;
    for (const auto& cell : wc.cells) {
        ++out.cells_examined;
        if (!cell.certified) {
            ++out.uncertified;
            continue;
        }
        const double mark = G(cell.size(sigma)) / n;
        if (mark > c) out.points.push_back({cell.center / s, mark});
    }
    return out;
}

std::vector<MarkedProcess> replicate_zeta(const ProcessParams& p, double n, const Box& W, double c,
                                          std::size_t replicates, std::uint64_t seed) {
    std::vector<MarkedProcess> out(replicates);
    parallel_for(replicates, [&](std::size_t i) {
        Rng rng(seed, i);
        out[i] = build_zeta_n(p, n, W, c, rng);
    });
    check_uncertified(out);
    return out;
}

std::vector<MarkedProcess> replicate_xi(const ProcessParams& p, double n, const Box& W, double c,
                                        const SizeFunctional& sigma, const GTransform& G, std::size_t replicates,
                                        std::uint64_t seed) {
    G.inverse(n * c);  // fail before spending time
    std::vector<MarkedProcess> out(replicates);
    parallel_for(replicates, [&](std::size_t i) {
        Rng rng(seed, i);
        out[i] = build_xi_n(p, n, W, c, sigma, G, rng);
    });
    check_uncertified(out);
    return out;
}

CountSummary count_summary(std::span<const MarkedProcess> samples) {
    if (samples.size() < 2) throw InsufficientSamples("need at least two replicates");
    CountSummary s;
    std::vector<double> xs;
    std::size_t examined = 0, bad = 0;
    for (const auto& m : samples) {
        s.counts.push_back(static_cast<long>(m.count()));
        xs.push_back(static_cast<double>(m.count()));
        examined += m.cells_examined;
        bad += m.uncertified;
    }
    const auto ms = mean_se(xs);
    s.mean = ms.mean;
    s.se = ms.se;
    const double n = static_cast<double>(xs.size());
    s.fano = s.mean > 0 ? ms.sd * ms.sd / s.mean : 0.0;
    s.fano_se = s.mean > 0 ? std::sqrt((1.0 / s.mean + 2.0) / n) : 0.0;
    s.uncertified_fraction = examined ? static_cast<double>(bad) / static_cast<double>(examined) : 0.0;
    return s;
}

double mark_law_pvalue(std::span<const MarkedProcess> samples) {
    std::vector<double> u;
    for (const auto& m : samples)
        for (const auto& p : m.points)
            u.push_back(m.kind == MarkKind::zeta ? std::exp(-(p.mark - m.c)) : m.c / p.mark);
    if (u.size() < 10) throw InsufficientSamples("fewer than 10 marked points");
    const std::size_t n = u.size();
    const double D = ks_statistic(std::move(u), [](double x) { return std::clamp(x, 0.0, 1.0); });
    return ks_pvalue(D, n);
}

RatioEstimate mark_survival_ratio(std::span<const MarkedProcess> samples, double y1, double y2) {
    if (samples.empty()) throw InsufficientSamples("no replicates");
    if (!(y1 < y2)) throw PreconditionViolated("need y1 < y2");
    RatioEstimate r;
    for (const auto& m : samples)
        for (const auto& p : m.points) {
            r.above_low += p.mark > y1;
            r.above_high += p.mark > y2;
        }
    if (r.above_high < 10) throw InsufficientSamples("fewer than 10 marks above the upper threshold");
    r.expected = samples[0].kind == MarkKind::xi ? y2 / y1 : std::exp(y2 - y1);
    // the upper count is binomial given the lower one
    const double lo = static_cast<double>(r.above_low), q = static_cast<double>(r.above_high) / lo;
    r.ratio = 1.0 / q;
    r.se = std::sqrt(q * (1.0 - q) / lo) / (q * q);
    return r;
}

double poisson_tv(double a, double b) {
    // both pmfs are negligible beyond this point
    const long kmax = static_cast<long>(std::max(a, b) + 40.0 * std::sqrt(std::max(a, b) + 1.0) + 40.0);
    double s = 0.0;
    for (long k = 0; k <= kmax; ++k) s += std::fabs(poisson_pmf(k, a) - poisson_pmf(k, b));
    return 0.5 * s;
}

namespace {

double tv_from_counts(const std::vector<double>& freq, double total, const CountLaw& law) {
    double s = 0.0, covered = 0.0;
    for (std::size_t k = 0; k < freq.size(); ++k) {
        const double q = law.pmf(static_cast<long>(k));
        s += std::fabs(freq[k] / total - q);
        covered += q;
    }
    return 0.5 * (s + std::max(0.0, 1.0 - covered));
}

}  // namespace

TvResult count_tv(std::span<const long> counts, const CountLaw& law, std::size_t resamples, std::uint64_t seed) {
    if (counts.size() < 200) throw InsufficientSamples("count_tv needs at least 200 replicates");
    if (!(law.lambda >= 0)) throw PreconditionViolated("Poisson mean must be non-negative");
    if (resamples < 20) throw PreconditionViolated("need at least 20 bootstrap resamples");
    const long kmax = *std::max_element(counts.begin(), counts.end());
    // the pmf vector must cover every k with visible law mass as well
    const std::size_t width = static_cast<std::size_t>(
        std::max<double>(static_cast<double>(kmax), law.lambda + 40.0 * std::sqrt(law.lambda + 1.0) + 40.0)) + 1;
    const double total = static_cast<double>(counts.size());
    std::vector<double> freq(width, 0.0);
    for (long k : counts) {
        if (k < 0) throw PreconditionViolated("negative count");
        freq[static_cast<std::size_t>(k)] += 1.0;
    }
    TvResult res;
    res.replicates = counts.size();
    res.tv = tv_from_counts(freq, total, law);

    std::vector<double> boot(resamples);
    parallel_for(resamples, [&](std::size_t b) {
        Rng rng(seed, b);
        std::vector<double> f(width, 0.0);
        for (std::size_t i = 0; i < counts.size(); ++i)
            f[static_cast<std::size_t>(counts[rng.below(counts.size())])] += 1.0;
        boot[b] = tv_from_counts(f, total, law);
    });
    res.bias_corrected = 2.0 * res.tv - pairwise_sum(boot) / static_cast<double>(resamples);
    res.ci_low = 2.0 * res.tv - quantile(boot, 0.975);
    res.ci_high = 2.0 * res.tv - quantile(boot, 0.025);
    return res;
}

std::vector<Bin> standard_bins(MarkKind kind, const Box& W, double c) {
    const Vector mid = (W.lo + W.hi) / 2;
    std::vector<Box> parts;
    if (W.dim() == 2) {
        for (int qx = 0; qx < 2; ++qx)
            for (int qy = 0; qy < 2; ++qy) {
                Box b = W;
                (qx ? b.lo : b.hi)[0] = mid[0];
                (qy ? b.lo : b.hi)[1] = mid[1];
                parts.push_back(b);
            }
    } else {
        // split along the first axis only
        Box a = W, b = W;
        a.hi[0] = mid[0];
        b.lo[0] = mid[0];
        parts = {a, b};
    }
    const double split = kind == MarkKind::zeta ? c + 1.0 : 2.0 * c;
    std::vector<Bin> bins;
    for (const auto& part : parts) {
        bins.push_back({part, c, split});
        bins.push_back({part, split, kInf});
    }
    return bins;
}

double expected_bin_count(MarkKind kind, double gamma_d, const Bin& b) {
    const double area = box_volume_clipped(b.region);
    if (kind == MarkKind::zeta) return gamma_d * area * (std::exp(-b.y1) - std::exp(-b.y2));
    return gamma_d * area * (1.0 / b.y1 - (std::isfinite(b.y2) ? 1.0 / b.y2 : 0.0));
}

MultibinReport multibin_poisson_test(std::span<const MarkedProcess> samples, const std::vector<Bin>& bins,
                                     double gamma_d) {
    if (samples.size() < 500) throw InsufficientSamples("multibin test needs at least 500 replicates");
    if (bins.empty()) throw PreconditionViolated("no bins");
    const std::size_t n = samples.size(), m = bins.size();
    const double nn = static_cast<double>(n);
    const MarkKind kind = samples[0].kind;
    std::vector<double> expected(m);
    for (std::size_t j = 0; j < m; ++j) {
        expected[j] = expected_bin_count(kind, gamma_d, bins[j]);
        if (expected[j] * nn < 5.0)
            throw InsufficientSamples("pooled expected count below 5 in a bin; add replicates or merge bins");
    }
    std::vector<std::vector<double>> counts(m, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            counts[j][i] = static_cast<double>(samples[i].count_in(bins[j].region, bins[j].y1, bins[j].y2));

    MultibinReport rep;
    rep.pass = true;
    std::vector<double> means(m);
    for (std::size_t j = 0; j < m; ++j) {
        BinRow row;
        row.mean = means[j] = pairwise_sum(counts[j]) / nn;
        row.expected = expected[j];
        // Poisson variance equals the mean
        row.se = std::sqrt(expected[j] / nn);
        row.z = (row.mean - row.expected) / row.se;
        row.pass = std::fabs(row.z) <= 3.0;
        rep.chi_square += row.z * row.z;
        rep.pass = rep.pass && row.pass;
        rep.bins.push_back(row);
    }
    std::vector<double> prod(n);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            for (std::size_t i = 0; i < n; ++i) prod[i] = (counts[a][i] - means[a]) * (counts[b][i] - means[b]);
            CovarianceRow row;
            row.i = a;
            row.j = b;
            row.cov = pairwise_sum(prod) / (nn - 1.0);
            // independent Poisson counts: var of the product is lambda_a lambda_b
            row.se = std::sqrt(expected[a] * expected[b] / nn);
            row.z = row.cov / row.se;
            row.pass = std::fabs(row.z) <= 3.0;
            rep.pass = rep.pass && row.pass;
            rep.covariances.push_back(row);
        }
    return rep;
}

KendallResult kendall_experiment(const std::vector<CellRecord>& cells, const KendallOptions& opt) {
    std::vector<double> size, theta;
    for (const auto& c : cells) {
        if (!c.body) throw PreconditionViolated("kendall_experiment needs cell bodies");
        size.push_back(c.size(opt.sigma));
        theta.push_back(deviation_theta(*c.body));
    }
    if (size.size() < 100) throw InsufficientSamples("kendall_experiment needs at least 100 cells");
    std::vector<double> grid = opt.u_grid;
    if (grid.empty())
        for (double q : opt.quantiles) grid.push_back(quantile(size, q));
    if (!std::is_sorted(grid.begin(), grid.end())) throw PreconditionViolated("u grid must be ascending");

    KendallResult res;
    res.unconditional_mean = mean_se(theta).mean;
    for (double u : grid) {
        std::vector<double> t, hit;
        for (std::size_t i = 0; i < size.size(); ++i)
            if (size[i] > u) {
                t.push_back(theta[i]);
                hit.push_back(theta[i] >= opt.theta_level);
            }
        if (t.size() < 30) throw InsufficientSamples("fewer than 30 cells above a grid threshold");
        const auto ms = mean_se(t);
        const auto ps = mean_se(hit);
        res.rows.push_back({u, t.size(), ms.mean, ms.se, ps.mean, ps.se});
    }
    res.strictly_decreasing = res.p_decreasing = true;
    for (std::size_t k = 1; k < res.rows.size(); ++k) {
        const auto &a = res.rows[k - 1], &b = res.rows[k];
        if (!(b.mean_theta < a.mean_theta - 3.0 * std::hypot(a.se, b.se))) res.strictly_decreasing = false;
        if (b.p_theta > a.p_theta + 3.0 * std::hypot(a.p_se, b.p_se)) res.p_decreasing = false;
    }
    return res;
}

KendallResult kendall_experiment(const ProcessParams& p, const KendallOptions& opt) {
    TypicalCellOptions to;
    to.rule = Certification::hull;
    to.with_body = true;
    to.sigma = opt.sigma;
    const auto sample = sample_typical_cells(p, opt.samples, to);
    return kendall_experiment(sample.cells, opt);
}

IsoperimetricReport isoperimetric_check(const std::vector<CellRecord>& cells, const SizeFunctional& sigma,
                                        double slack) {
    if (!(sigma.tau > 0)) throw PreconditionViolated("size functional has no isoperimetric constant");
    IsoperimetricReport rep;
    rep.min_ratio = kInf;
    for (const auto& c : cells) {
        if (!c.body) continue;
        const double phi = phi_mean_width(*c.body);
        const double bound = sigma.tau * std::pow(c.size(sigma), 1.0 / sigma.k);
        ++rep.checked;
        rep.violations += phi < bound - slack;
        if (bound > 0) rep.min_ratio = std::min(rep.min_ratio, phi / bound);
    }
    return rep;
}

AsymptoteResult g_inverse_asymptote_check(const GTransform& G, double gamma, const SizeFunctional& sigma,
                                          const std::vector<double>& log_n) {
    const auto& F = G.distribution();
    const std::size_t N = F.n();
    if (N < 1000000) throw PreconditionViolated("G must be fitted on at least 1e6 cells");
    if (log_n.empty()) throw PreconditionViolated("empty n grid");
    AsymptoteResult res;
    res.target = sigma.tau * gamma;
    const double nn = static_cast<double>(N);
    auto at_index = [&](double k) {
        const auto i = static_cast<std::size_t>(std::clamp(std::ceil(k), 1.0, nn));
        return F.values[i - 1];
    };
    for (double ln : log_n) {
        AsymptoteRow row;
        row.log_n = ln;
        const double y = std::exp(ln);
        row.g_inverse = G.inverse(y);
        const double p = 1.0 / y, k = nn * (1.0 - p), spread = 2.0 * std::sqrt(nn * p * (1.0 - p));
        auto ratio = [&](double v) { return ln / std::pow(v, 1.0 / sigma.k); };
        row.ratio = ratio(row.g_inverse);
        row.ci_low = ratio(at_index(k + spread));
        row.ci_high = ratio(at_index(k - spread));
        res.rows.push_back(row);
    }
    const double last = res.rows.back().ratio;
    res.final_within = last >= 0.8 * res.target && last <= 1.2 * res.target;
    res.monotone = true;
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        if (res.rows[i].ci_high < res.rows[i - 1].ci_low) res.monotone = false;
    return res;
}

EmpiricalDistribution fit_g_corpus(const ProcessParams& p, const GCorpusOptions& opt) {
    TypicalCellOptions to;
    to.rule = Certification::hull;
    to.with_body = true;
    to.window_side = opt.window_side;
    to.sigma = opt.sigma;
    ProcessParams q = p;
    q.seed = opt.seed;
    return sample_typical_cells(q, opt.cells, to).sizes;
}

EmpiricalDistribution load_or_fit_g_corpus(const std::string& path, const ProcessParams& p,
                                           const GCorpusOptions& opt) {
    nlohmann::ordered_json meta;
    meta["gamma"] = p.gamma;
    meta["d"] = p.d;
    meta["seed"] = opt.seed;
    meta["cells"] = opt.cells;
    meta["window_side"] = opt.window_side;
    meta["sigma"] = opt.sigma.name();
    const std::string side = path + ".json";
    if (std::filesystem::exists(path) && std::filesystem::exists(side)) {
        std::ifstream ms(side);
        const auto stored = nlohmann::ordered_json::parse(ms, nullptr, false);
        if (!stored.is_discarded() && stored == meta) {
            std::ifstream is(path);
            auto F = EmpiricalDistribution::read_csv(is);
            if (F.n() >= opt.cells) return F;  // whole realizations are kept
        }
    }
    auto F = fit_g_corpus(p, opt);
    {
        std::ofstream os(path, std::ios::binary);
        F.write_csv(os);
    }
    std::ofstream ms(side, std::ios::binary);
    ms << meta.dump(2) << "\n";
    return F;
}

}  // namespace hypermosaic
