#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hypermosaic/mosaic.hpp"

using namespace hypermosaic;

namespace {

Vector origin(int d) { return Vector::Zero(d); }

Hyperplane line(double angle, double r) {
    Vector u(2);
    u << std::cos(angle), std::sin(angle);
    return {u, r};
}

// brute force: every tuple via the sign-pattern solver, emptiness with a loose tolerance
std::size_t brute_force_cells(const Realization& w, const Window& W) {
    const int d = w.params.d, n = static_cast<int>(w.size());
    std::size_t count = 0;
    if (n < d + 1) return 0;
    std::vector<int> idx(d + 1);
    for (int k = 0; k <= d; ++k) idx[k] = k;
    for (;;) {
        std::vector<Hyperplane> t;
        for (int k : idx) t.push_back(w.hyperplanes[k]);
        try {
            const auto ib = simplex_inball<double>(t);
            bool ok = window_contains(W, ib.center);
            for (int m = 0; ok && m < n; ++m)
                if (std::find(idx.begin(), idx.end(), m) == idx.end() &&
                    w.hyperplanes[m].distance(ib.center) < ib.radius * (1 - 1e-9))
                    ok = false;
            count += ok;
        } catch (const Error&) {
        }
        int k = d;
        while (k >= 0 && idx[k] == n - (d + 1) + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j <= d; ++j) idx[j] = idx[j - 1] + 1;
    }
    return count;
}

double survival_at(const std::vector<CellRecord>& cells, double R) {
    double k = 0;
    for (const auto& c : cells) k += c.inradius > R;
    return k / static_cast<double>(cells.size());
}

}  // namespace

TEST_SUITE("mosaic") {

TEST_CASE("bounded cells of a few lines") {
    // N lines in general position have C(N-1, 2) bounded cells
    Rng rng(2);
    for (int N : {3, 4, 5}) {
        for (int rep = 0; rep < 20; ++rep) {
            Realization w{{}, {origin(2), 1000.0}, {1.0, 2, 0}};
            for (int k = 0; k < N; ++k) w.hyperplanes.push_back(line(rng.uniform(0, 2 * std::numbers::pi), rng.uniform(-1, 1)));
            const Window W = Ball{origin(2), 999.0};
            CHECK(extract_cells(w, W).size() == static_cast<std::size_t>((N - 1) * (N - 2) / 2));
        }
    }
    Realization w{{line(0, 0), line(2, 0.3), line(4, -0.2)}, {origin(2), 100.0}, {1.0, 2, 0}};
    CHECK(extract_cells(w, Ball{origin(2), 50.0}, 100.0).empty());
    CHECK_THROWS_AS(extract_cells(w, Ball{origin(2), 101.0}), WindowNotContained);
    CHECK_THROWS_AS(extract_cells(w, Box{Vector::Constant(2, -80), Vector::Constant(2, 80)}), WindowNotContained);
}

TEST_CASE("extraction agrees with brute force and keeps inballs empty") {
    Rng rng(4);
    for (int d : {2, 3}) {
        for (int rep = 0; rep < (d == 2 ? 20 : 6); ++rep) {
            const double R = d == 2 ? 9.0 : 3.5;
            auto w = sample({1.0, d, 0}, {origin(d), R}, rng);
            const Window W = Box{Vector::Constant(d, -R / 2), Vector::Constant(d, R / 2)};
            const auto cells = extract_cells(w, W);
            CHECK(cells.size() == brute_force_cells(w, W));
            for (std::size_t i = 0; i < cells.size(); ++i) {
                const auto& c = cells[i];
                CHECK(c.inradius > 0);
                for (int m = 0; m < static_cast<int>(w.size()); ++m) {
                    const double dist = w.hyperplanes[m].distance(c.center);
                    if (std::find(c.tuple.begin(), c.tuple.end(), m) != c.tuple.end())
                        CHECK(dist == doctest::Approx(c.inradius).epsilon(1e-9));
                    else
                        CHECK(dist > c.inradius * (1 - 1e-12));
                }
                for (std::size_t j = 0; j < i; ++j) CHECK((cells[j].center - c.center).norm() > 1e-9);
            }
        }
    }
}

TEST_CASE("gamma^(d) estimator") {
    const auto g1 = gamma_d_estimate(2, 1.0, 400000, 3);
    CHECK(std::fabs(g1.value - 1.0 / std::numbers::pi) < 3 * g1.se);
    // Wendel: d+1 uniform directions positively span with probability 2^{-d}
    CHECK(std::fabs(g1.spanning_fraction - 0.25) < 3 * g1.spanning_se);
    const auto g2 = gamma_d_estimate(2, 2.0, 400000, 3);
    CHECK(g2.value / g1.value == doctest::Approx(4.0).epsilon(1e-12));  // same stream
    const auto g3 = gamma_d_estimate(3, 1.0, 400000, 5);
    CHECK(std::fabs(g3.spanning_fraction - 0.125) < 3 * g3.spanning_se);
    const auto g3b = gamma_d_estimate(3, 2.0, 400000, 6);  // independent stream
    CHECK(std::fabs(g3b.value / g3.value - 8.0) < 3 * 8.0 * std::hypot(g3.se / g3.value, g3b.se / g3b.value));
}

TEST_CASE("typical cell inradius law") {
    for (double gamma : {1.0, 2.0}) {
        CAPTURE(gamma);
        const auto s = sample_typical_cells({gamma, 2, 11}, 10000);
        REQUIRE(s.cells.size() >= 10000);
        CHECK(s.uncertified == 0);
        for (const auto& c : s.cells) {
            CHECK(c.certified);
            CHECK(c.stopping_radius.value() >= c.inradius / std::cos(std::numbers::pi / 12));
        }
        for (double R : {0.25, 0.5, 1.0}) {
            const double p = std::exp(-2 * gamma * R);
            CHECK(std::fabs(survival_at(s.cells, R) - p) < 3 * binomial_se(p, s.cells.size()));
        }
        // two estimators of the cell intensity
        const auto m = mean_se(s.cells_per_volume);
        const auto g = gamma_d_estimate(2, gamma, 200000, 8);
        CHECK(std::fabs(m.mean - g.value) < 3 * std::hypot(m.se, g.se));
    }
}

TEST_CASE("inradius law on a ball window") {
    // window independence: same law from cells centred in a disc of radius 0.8
    Rng rng(21);
    WindowOptions opt;
    opt.rule = Certification::inball;
    const Window W = Ball{origin(2), 0.8};
    std::vector<CellRecord> cells;
    while (cells.size() < 8000) {
        auto wc = window_cells({1.0, 2, 0}, W, opt, rng);
        for (auto& c : wc.cells) cells.push_back(std::move(c));
    }
    for (double R : {0.25, 0.5, 1.0}) {
        const double p = std::exp(-2 * R);
        CHECK(std::fabs(survival_at(cells, R) - p) < 3 * binomial_se(p, cells.size()));
    }
}

TEST_CASE("certification") {
    Rng rng(5);
    const auto cones = build_cone_system(2, std::numbers::pi / 12);
    std::size_t deep_certified = 0, deep = 0, checked = 0;
    for (int rep = 0; rep < 40; ++rep) {
        auto w = sample({1.0, 2, 0}, {origin(2), 80.0}, rng);
        auto cells = extract_cells(w, Box{Vector::Constant(2, -1), Vector::Constant(2, 1)});
        for (auto c : cells) {
            c = certify_cell(c, w, cones);
            ++deep;
            deep_certified += c.certified;
            if (!c.certified) continue;
            // more hyperplanes outside the region leave a certified cell unchanged
            attach_body(c, w);
            Realization big = w;
            extend(big, 200.0, rng);
            CellRecord again = c;
            attach_body(again, big);
            REQUIRE(again.body->vertices.size() == c.body->vertices.size());
            for (std::size_t k = 0; k < c.body->vertices.size(); ++k)
                CHECK((again.body->vertices[k] - c.body->vertices[k]).norm() < 1e-9);
            // and from the stopping ball alone
            Realization local{restrict_to_hitting(w.hyperplanes, {c.center, *c.stopping_radius}), w.region, w.params};
            CellRecord loc = c;
            std::vector<int> remap;
            for (int t : c.tuple)
                for (int m = 0; m < static_cast<int>(local.size()); ++m)
                    if (local.hyperplanes[m].r == w.hyperplanes[t].r && local.hyperplanes[m].u == w.hyperplanes[t].u)
                        remap.push_back(m);
            loc.tuple = remap;
            attach_body(loc, local);
            CHECK(std::fabs(loc.volume - c.volume) < 1e-9);
            ++checked;
        }
    }
    CHECK(checked > 20);
    CHECK(deep_certified > 0.9 * static_cast<double>(deep));
    // the same cells in a region barely larger than the window fail
    auto w = sample({1.0, 2, 0}, {origin(2), 3.0}, rng);
    for (auto c : extract_cells(w, Box{Vector::Constant(2, -1), Vector::Constant(2, 1)})) {
        c = certify_cell(c, w, cones);
        CHECK_FALSE(c.certified);
    }
}

TEST_CASE("G transform") {
    std::vector<double> xs;
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) xs.push_back(rng.exponential(1.0));
    const auto F = EmpiricalDistribution::from(xs);
    const GTransform G(F);
    for (std::size_t i = 1; i < F.n(); ++i) CHECK(G(F.values[i - 1]) <= G(F.values[i]));
    CHECK(G(-1.0) == 1.0);
    CHECK(G(1e9) == doctest::Approx(1001.0));
    for (std::size_t i = 0; i < F.n(); ++i) CHECK(G.inverse(G(F.values[i])) == F.values[i]);
    CHECK_THROWS_AS(G.inverse(1002.0), OutOfRange);
    const auto tiny = EmpiricalDistribution::from({1.0, 2.0, 3.0});
    CHECK_THROWS_AS(GTransform(tiny).inverse(2.0), PreconditionViolated);
    std::stringstream ss;
    F.write_csv(ss);
    const auto back = EmpiricalDistribution::read_csv(ss);
    CHECK(back.values == F.values);
}

TEST_CASE("Pareto property on held-out cells") {
    TypicalCellOptions opt;
    opt.rule = Certification::hull;
    opt.with_body = true;
    opt.sigma = SizeFunctional::volume(2);
    const auto fit = sample_typical_cells({1.0, 2, 31}, 20000, opt);
    const auto test = sample_typical_cells({1.0, 2, 32}, 10000, opt);
    const GTransform G(fit.sizes);
    for (double u : {2.0, 10.0}) {
        double k = 0;
        for (double v : test.sizes.values) k += G(v) > u;
        const double n = static_cast<double>(test.sizes.n());
        // held-out frequency and fit error both contribute
        const double se = std::sqrt(binomial_se(1 / u, test.sizes.n()) * binomial_se(1 / u, test.sizes.n()) +
                                    binomial_se(1 / u, fit.sizes.n()) * binomial_se(1 / u, fit.sizes.n()));
        CHECK(std::fabs(k / n - 1 / u) < 3 * se);
    }
}

TEST_CASE("volume tail and isoperimetric rate") {
    TypicalCellOptions opt;
    opt.rule = Certification::hull;
    opt.with_body = true;
    opt.window_side = 5.0;
    opt.sigma = SizeFunctional::volume(2);
    const auto s = sample_typical_cells({1.0, 2, 41}, 300000, opt);
    const double tau = opt.sigma.tau;
    std::vector<double> ratio;
    for (double u : {5.0, 15.0, 30.0, 50.0, 75.0}) ratio.push_back(-std::log(s.sizes.survival(u)) / std::sqrt(u));
    for (std::size_t i = 1; i < ratio.size(); ++i) CHECK(ratio[i] > ratio[i - 1]);
    MESSAGE("-log P(V>u)/sqrt(u) at u=75: " << ratio.back() << " (limit " << tau << ")");
    // local slope over the observable tail
    const double slope = (std::log(s.sizes.survival(30.0)) - std::log(s.sizes.survival(75.0))) /
                         (std::sqrt(75.0) - std::sqrt(30.0));
    CHECK(std::fabs(slope / tau - 1.0) < 0.15);

    // no flat stretches of the empirical cdf in the bulk: max gap against the
    // spacing expected from the local density
    const auto& v = s.sizes.values;
    const std::size_t n = v.size(), k = 200;
    double worst = 0.0;
    for (std::size_t i = n / 100; i + k < n * 99 / 100; i += k) {
        const double local = (v[i + k] - v[i]) / static_cast<double>(k);  // 1/(n f)
        double gap = 0.0;
        for (std::size_t j = i; j < i + k; ++j) gap = std::max(gap, v[j + 1] - v[j]);
        worst = std::max(worst, gap / (3.0 * local * std::log(static_cast<double>(n))));
    }
    CHECK(worst < 1.0);
    CHECK(v.front() > 0.0);
}

TEST_CASE("zero cell dominates the typical cell") {
    Rng rng(51);
    std::vector<double> zero;
    for (int i = 0; i < 4000; ++i) {
        const auto P = zero_cell({1.0, 2, 0}, rng);
        CHECK(P.contains(origin(2)));
        zero.push_back(polytope_volume(P));
    }
    const auto Z0 = EmpiricalDistribution::from(zero);
    TypicalCellOptions opt;
    opt.rule = Certification::hull;
    opt.with_body = true;
    opt.sigma = SizeFunctional::volume(2);
    const auto typ = sample_typical_cells({1.0, 2, 52}, 4000, opt);
    // Miles: E A = pi, E A^2 = pi^4/2 for the typical cell at unit length
    // intensity, so the zero cell (area-weighted) has mean pi^3/2
    CHECK(std::fabs(pairwise_sum(zero) / zero.size() - std::pow(std::numbers::pi, 3) / 2) <
          3 * mean_se(zero).se);
    for (double u : {1.0, 3.0, 6.0, 12.0}) {
        const double pt = typ.sizes.survival(u), pz = Z0.survival(u);
        CHECK(pt <= pz + 3 * std::hypot(binomial_se(pt, typ.sizes.n()), binomial_se(pz, Z0.n())));
    }
    CHECK_THROWS_AS(zero_cell({1.0, 3, 0}, rng), DimensionUnsupported);
}

TEST_CASE("cell CSV") {
    auto w = sample({1.0, 2, 9}, {origin(2), 6.0});
    auto cells = extract_cells(w, Box{Vector::Constant(2, -1), Vector::Constant(2, 1)});
    REQUIRE(!cells.empty());
    attach_body(cells[0], w);
    std::stringstream ss;
    write_cells_csv(cells, 2, ss);
    CHECK(ss.str().rfind("z_1,z_2,r,volume,surface,certified\r\n", 0) == 0);
}

}  // TEST_SUITE
