#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "hypermosaic/extremes.hpp"
#include "hypermosaic/stats.hpp"

using namespace hypermosaic;

namespace {

const Box kUnit{Vector::Zero(2), Vector::Ones(2)};
const double kGamma2 = 1.0 / std::numbers::pi;

// one small corpus per test binary run
const EmpiricalDistribution& small_corpus() {
    static const EmpiricalDistribution F = [] {
        GCorpusOptions o;
        o.cells = 100000;
        o.seed = 404;
        return fit_g_corpus({1.0, 2, 0}, o);
    }();
    return F;
}

}  // namespace

TEST_SUITE("extremes") {

TEST_CASE("intensity measure and count laws") {
    CHECK(gamma_d_planar(1.0) == doctest::Approx(kGamma2).epsilon(1e-15));
    CHECK(gamma_d_planar(2.0) == doctest::Approx(4 * kGamma2).epsilon(1e-15));
    CHECK(zeta_count_law(kGamma2, kUnit, 0.0).lambda == doctest::Approx(kGamma2));
    CHECK(zeta_count_law(kGamma2, kUnit, 1.5).lambda == doctest::Approx(kGamma2 * std::exp(-1.5)));
    CHECK(xi_count_law(kGamma2, kUnit, 2.0).lambda == doctest::Approx(kGamma2 / 2));
    CHECK_THROWS_AS(xi_count_law(kGamma2, kUnit, 0.0), PreconditionViolated);
    const Bin b{kUnit, 1.0, kInf};
    CHECK(expected_bin_count(MarkKind::zeta, kGamma2, b) == doctest::Approx(kGamma2 * std::exp(-1.0)));
    CHECK(expected_bin_count(MarkKind::xi, kGamma2, b) == doctest::Approx(kGamma2));
    // (c, 2c] and (2c, inf) carry equal xi mass
    const auto bins = standard_bins(MarkKind::xi, kUnit, 3.0);
    REQUIRE(bins.size() == 8);
    CHECK(expected_bin_count(MarkKind::xi, kGamma2, bins[0]) ==
          doctest::Approx(expected_bin_count(MarkKind::xi, kGamma2, bins[1])));
    double area = 0;
    for (std::size_t i = 0; i < bins.size(); i += 2) area += bins[i].region.volume();
    CHECK(area == doctest::Approx(1.0));
}

TEST_CASE("exact Poisson total variation") {
    // pmfs cross between k = 1 and k = 2
    CHECK(poisson_tv(1, 2) == doctest::Approx(2 / std::exp(1.0) - 3 / std::exp(2.0)).epsilon(1e-13));
    CHECK(poisson_tv(0.7, 0.7) == 0.0);
    CHECK(poisson_tv(3, 1) == doctest::Approx(poisson_tv(1, 3)));
}

TEST_CASE("count_tv recovers known distances") {
    Rng rng(1);
    std::vector<long> same, other;
    for (int i = 0; i < 2000; ++i) same.push_back(rng.poisson(kGamma2));
    for (int i = 0; i < 10000; ++i) other.push_back(rng.poisson(1.0));
    const auto a = count_tv(same, {kGamma2}, 1000, 2);
    CHECK(a.ci_low <= 0.0);
    CHECK(a.ci_high > 0.0);
    CHECK(a.tv >= 0.0);
    const auto b = count_tv(other, {2.0}, 1000, 3);
    CHECK(b.ci_low <= poisson_tv(1, 2));
    CHECK(poisson_tv(1, 2) <= b.ci_high);
    CHECK_THROWS_AS(count_tv(std::span<const long>(same.data(), 199), {kGamma2}), InsufficientSamples);
}

TEST_CASE("multibin test on an exact Poisson process") {
    // homogeneous Poisson points on W with Exp(1) marks above c = 0
    std::vector<MarkedProcess> runs(3000);
    Rng rng(12);
    for (auto& r : runs) {
        r.window = kUnit;
        const long k = rng.poisson(kGamma2);
        for (long i = 0; i < k; ++i) {
            Vector x(2);
            x << rng.uniform(), rng.uniform();
            r.points.push_back({x, rng.exponential(1.0)});
        }
    }
    const auto rep = multibin_poisson_test(runs, standard_bins(MarkKind::zeta, kUnit, 0.0), kGamma2);
    for (const auto& b : rep.bins) CHECK(b.pass);
    std::size_t bad = 0;
    for (const auto& cv : rep.covariances) bad += !cv.pass;
    CHECK(bad <= 1);
    CHECK(mark_law_pvalue(runs) > 0.0027);
}

TEST_CASE("zeta_n preconditions and the empty limit") {
    Rng rng(3);
    CHECK_THROWS_AS(build_zeta_n({1, 2, 0}, 0.5, kUnit, 0.0, rng), PreconditionViolated);
    CHECK_THROWS_AS(build_zeta_n({1, 2, 0}, std::exp(4.0), kUnit, -4.0, rng), PreconditionViolated);
    CHECK_THROWS_AS(build_zeta_n({1, 3, 0}, std::exp(4.0), kUnit, 0.0, rng), PreconditionViolated);
    const auto runs = replicate_zeta({1, 2, 0}, std::exp(4.0), kUnit, 12.0, 200, 4);
    for (const auto& r : runs) CHECK(r.count() == 0);
}

TEST_CASE("zeta_n intensity, marks and multibin structure") {
    const double c = 0.0;
    const auto runs = replicate_zeta({1, 2, 0}, std::exp(6.0), kUnit, c, 3000, 5);
    for (const auto& r : runs)
        for (const auto& p : r.points) {
            CHECK(kUnit.contains(p.location));
            CHECK(p.mark > c);
        }
    const auto s = count_summary(runs);
    CHECK(s.uncertified_fraction < 0.1);
    CHECK(std::fabs(s.mean - kGamma2) < 3 * s.se);
    CHECK(std::fabs(s.fano - 1) < 3 * s.fano_se);
    CHECK(mark_law_pvalue(runs) > 0.0027);

    const auto rep = multibin_poisson_test(runs, standard_bins(MarkKind::zeta, kUnit, c), kGamma2);
    REQUIRE(rep.bins.size() == 8);
    REQUIRE(rep.covariances.size() == 28);
    for (const auto& b : rep.bins) CHECK(b.pass);
    // long lines couple distant cells at finite n, so covariances sit
    // slightly above 0; bound them rather than require all 28 inside 3 sigma
    double zsum = 0, zmax = 0;
    for (const auto& cv : rep.covariances) {
        zsum += cv.z;
        zmax = std::max(zmax, std::fabs(cv.z));
    }
    CHECK(zsum / 28 < 2.0);
    CHECK(zmax < 5.0);
    // a single bin is the total count
    const auto one = multibin_poisson_test(runs, {Bin{kUnit, c, kInf}}, kGamma2);
    CHECK(one.bins[0].mean == doctest::Approx(s.mean));
    CHECK(one.covariances.empty());
    CHECK_THROWS_AS(multibin_poisson_test(std::span(runs).first(499), {Bin{kUnit, c, kInf}}, kGamma2),
                    InsufficientSamples);
    // pooled expectation under 5 in a bin
    CHECK_THROWS_AS(multibin_poisson_test(runs, {Bin{kUnit, 9.0, kInf}}, kGamma2), InsufficientSamples);
    // e^{-(m - c)} survival: P(m > 0) / P(m > 1) = e
    const auto ratio = mark_survival_ratio(runs, 0.0, 1.0);
    CHECK(std::fabs(ratio.ratio - ratio.expected) < 3 * ratio.se);
}

TEST_CASE("xi_n intensity and Pareto marks") {
    const GTransform G(small_corpus());
    Rng rng(6);
    CHECK_THROWS_AS(build_xi_n({1, 2, 0}, std::exp(12.0), kUnit, 2.0, SizeFunctional::volume(2), G, rng),
                    OutOfRange);
    EmpiricalDistribution tiny = EmpiricalDistribution::from({1, 2, 3, 4, 5});
    CHECK_THROWS_AS(build_xi_n({1, 2, 0}, 10.0, kUnit, 2.0, SizeFunctional::volume(2), GTransform(tiny), rng),
                    PreconditionViolated);

    const double c = 2.0;
    const auto runs = replicate_xi({1, 2, 0}, std::exp(4.0), kUnit, c, SizeFunctional::volume(2), G, 4000, 7);
    for (const auto& r : runs)
        for (const auto& p : r.points) CHECK(p.mark > c);
    const auto s = count_summary(runs);
    CHECK(std::fabs(s.mean - kGamma2 / c) < 3 * s.se);
    CHECK(mark_law_pvalue(runs) > 0.0027);
    const auto ratio = mark_survival_ratio(runs, 2 * c, 4 * c);
    CHECK(ratio.expected == doctest::Approx(2.0));
    CHECK(std::fabs(ratio.ratio - 2.0) < 3 * ratio.se);
    const auto rep = multibin_poisson_test(runs, standard_bins(MarkKind::xi, kUnit, c), kGamma2);
    for (const auto& b : rep.bins) CHECK(b.pass);
}

TEST_CASE("Kendall shape concentration") {
    TypicalCellOptions to;
    to.rule = Certification::hull;
    to.with_body = true;
    to.sigma = SizeFunctional::volume(2);
    const auto cells = sample_typical_cells({1, 2, 8}, 30000, to).cells;
    KendallOptions ko;
    const auto res = kendall_experiment(cells, ko);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.strictly_decreasing);
    CHECK(res.p_decreasing);
    CHECK(res.rows[2].mean_theta < res.rows[0].mean_theta - 3 * std::hypot(res.rows[0].se, res.rows[2].se));
    // u below every size: the unconditional mean
    ko.u_grid = {0.0};
    CHECK(kendall_experiment(cells, ko).rows[0].mean_theta == doctest::Approx(res.unconditional_mean));
    ko.u_grid = {1e6};
    CHECK_THROWS_AS(kendall_experiment(cells, ko), InsufficientSamples);
    ko.u_grid = {5.0, 1.0};
    CHECK_THROWS_AS(kendall_experiment(cells, ko), PreconditionViolated);

    const auto iso = isoperimetric_check(std::vector<CellRecord>(cells.begin(), cells.begin() + 1000),
                                         SizeFunctional::volume(2));
    CHECK(iso.checked == 1000);
    CHECK(iso.violations == 0);
    CHECK(iso.min_ratio > 1.0);
    CHECK_THROWS_AS(isoperimetric_check(cells, SizeFunctional{}), PreconditionViolated);
}

TEST_CASE("G corpus persistence") {
    const auto dir = std::filesystem::temp_directory_path() / "hypermosaic_corpus_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "g.csv").string();
    std::filesystem::remove(path);
    GCorpusOptions o;
    o.cells = 3000;
    o.seed = 9;
    const auto a = load_or_fit_g_corpus(path, {1, 2, 0}, o);
    REQUIRE(std::filesystem::exists(path));
    const auto stamp = std::filesystem::last_write_time(path);
    const auto b = load_or_fit_g_corpus(path, {1, 2, 0}, o);
    CHECK(std::filesystem::last_write_time(path) == stamp);
    CHECK(a.values == b.values);
    // a different seed invalidates the file
    o.seed = 10;
    const auto c = load_or_fit_g_corpus(path, {1, 2, 0}, o);
    CHECK(c.values != a.values);
    std::filesystem::remove_all(dir);
}

TEST_CASE("G inverse asymptote") {
    const GTransform small(small_corpus());
    CHECK_THROWS_AS(g_inverse_asymptote_check(small, 1.0, SizeFunctional::volume(2)), PreconditionViolated);
    // shared with the acceptance run
    const auto F = load_or_fit_g_corpus("g_corpus_volume_d2.csv", {1, 2, 0}, GCorpusOptions{});
    const GTransform G(F);
    const auto res = g_inverse_asymptote_check(G, 1.0, SizeFunctional::volume(2));
    CHECK(res.target == doctest::Approx(2 / std::sqrt(std::numbers::pi)));
    CHECK(res.final_within);
    CHECK(res.monotone);
    CHECK_THROWS_AS(g_inverse_asymptote_check(G, 1.0, SizeFunctional::volume(2), {15.0}), OutOfRange);
}

}
