#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hypermosaic/mosaic.hpp"
#include "hypermosaic/process.hpp"
#include "hypermosaic/stats.hpp"
#include "hypermosaic/stopping.hpp"

using namespace hypermosaic;

namespace {

constexpr double kAlpha = std::numbers::pi / 12.0;

Vector v2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}

Box square(double h) { return {v2(-h, -h), v2(h, h)}; }

}  // namespace

TEST_SUITE("stopping") {

TEST_CASE("planar cones are equal sectors") {
    const auto cs = build_cone_system(2, kAlpha);
    REQUIRE(cs.size() == 24);
    CHECK(coverage_angle(cs, 100000) <= kAlpha / 2 + 1e-12);
    for (int i = 0; i < cs.size(); ++i) {
        CHECK(cs.neighbors[i].size() == 3);
        CHECK(std::find(cs.neighbors[i].begin(), cs.neighbors[i].end(), i) != cs.neighbors[i].end());
    }
    // each direction falls in exactly one sector; counts are uniform
    std::vector<int> idx, count(24, 0);
    const int grid = 240000;
    for (int k = 0; k < grid; ++k) {
        const double a = 2 * std::numbers::pi * (k + 0.5) / grid;
        cs.cones_of(v2(std::cos(a), std::sin(a)), idx);
        REQUIRE(idx.size() == 1);
        ++count[idx[0]];
    }
    for (int c : count) CHECK(c == grid / 24);
    CHECK(build_cone_system(2, 0.5).size() == 13);
}

TEST_CASE("cone system preconditions") {
    CHECK_THROWS_AS(build_cone_system(2, 0.0), PreconditionViolated);
    CHECK_THROWS_AS(build_cone_system(2, std::numbers::pi / 6), PreconditionViolated);
    CHECK_THROWS_AS(build_cone_system(4, kAlpha), DimensionUnsupported);
}

TEST_CASE("spatial cones cover the sphere") {
    const auto cs = build_cone_system(3, kAlpha);
    CHECK(coverage_angle(cs, 100000) < kAlpha / 2);
    Rng rng(11);
    std::vector<int> idx;
    Vector u;
    for (int k = 0; k < 20000; ++k) {
        rng.unit_vector(u, 3);
        cs.cones_of(u, idx);
        REQUIRE(!idx.empty());
    }
    for (int i = 0; i < cs.size(); ++i)
        CHECK(std::find(cs.neighbors[i].begin(), cs.neighbors[i].end(), i) != cs.neighbors[i].end());
}

TEST_CASE("cone radii of simple configurations") {
    const auto cs = build_cone_system(2, kAlpha);
    const Vector z = v2(1, -1);
    for (double R : cone_radii(z, {}, cs)) CHECK(R == kInf);
    // normal at angle inside sector 3, hyperplane at distance 2 from z
    const double a = (3 + 0.5) * 2 * std::numbers::pi / 24;
    const Vector u = v2(std::cos(a), std::sin(a));
    const std::vector<Hyperplane> one{{u, z.dot(u) + 2.0}};
    const auto R = cone_radii(z, one, cs);
    for (int i = 0; i < 24; ++i) {
        if (i == 3) CHECK(R[i] == doctest::Approx(2.0));
        else CHECK(R[i] == kInf);
    }
    // the same hyperplane seen from the other side lands in the opposite sector
    const auto Rflip = cone_radii(z + 4.0 * u, one, cs);
    CHECK(Rflip[15] == doctest::Approx(2.0));
}

TEST_CASE("cone radii are exponential with rate 2 gamma / |I|") {
    // disjoint sectors thin the distance process into independent pieces,
    // so all 24 radii of a realization can be pooled
    const auto cs = build_cone_system(2, kAlpha);
    const double gamma = 1.5, rate = 2 * gamma / 24;
    const Ball region{v2(0.3, 0.2), 200.0};
    std::vector<double> pooled;
    for (std::uint64_t s = 0; s < 4200; ++s) {
        Rng rng(77, s);
        const auto w = sample({gamma, 2, 0}, region, rng);
        for (double R : cone_radii(v2(0, 0), w.hyperplanes, cs)) pooled.push_back(R);
    }
    REQUIRE(pooled.size() == 100800);
    const double D = ks_statistic(pooled, [&](double x) { return x <= 0 ? 0.0 : -std::expm1(-rate * x); });
    CHECK(ks_pvalue(D, pooled.size()) > 1e-3);
}

TEST_CASE("btR survival formula") {
    CHECK(btr_survival(1.0 / std::cos(kAlpha), 1.0, 1.0, kAlpha, 24) == 1.0);
    CHECK(btr_survival(0.5, 1.0, 1.0, kAlpha, 24) == 1.0);
    const double expect = 1 - std::pow(1 - std::exp(-2 * (2 * std::cos(kAlpha) - 1) / 24), 24);
    CHECK(btr_survival(2.0, 1.0, 1.0, kAlpha, 24) == doctest::Approx(expect).epsilon(1e-13));
    // far tail ~ |I| e^{-2 gamma (u cos a - r) / |I|}
    const double u = 400;
    CHECK(btr_survival(u, 1.0, 1.0, kAlpha, 24) ==
          doctest::Approx(24 * std::exp(-2 * (u * std::cos(kAlpha) - 1) / 24)).epsilon(1e-6));
}

TEST_CASE("btR survival curve matches simulation") {
    for (double gamma : {1.0, 2.5}) {
        const auto rows = btr_experiment(gamma, 1.0, kAlpha, 10000, 5);
        REQUIRE(rows.size() == 10);
        CHECK(rows.front().empirical == 1.0);
        for (const auto& r : rows) {
            INFO("gamma " << gamma << " u " << r.u << " emp " << r.empirical << " exact " << r.exact);
            CHECK(std::fabs(r.empirical - r.exact) <= 3.0 * binomial_se(r.exact, 10000) + 1e-12);
        }
    }
    CHECK_THROWS_AS(btr_experiment(1, 1, kAlpha, 10, 1, 1), PreconditionViolated);
}

TEST_CASE("stopping radius is a stopping set and monotone") {
    const auto cs = build_cone_system(2, kAlpha);
    std::size_t trials = 0, finite = 0, seen = 0;
    for (std::uint64_t s = 0; trials < 10000; ++s) {
        Rng rng(21, s);
        // typical R is about 12 (log 24 + 0.58) / cos(alpha), near 47, at gamma = 1
        // cells come from the inner ball; the shell cannot reach their inballs
        auto w = sample({1.0, 2, 0}, Ball{v2(0, 0), 10.0}, rng);
        const auto cells = extract_cells(w, square(2.0));
        extend(w, 120.0, rng);
        for (const auto& c : cells) {
            const auto rec = stopping_radius(c.inball(), w.hyperplanes, cs);
            CHECK(rec.R >= c.inradius / std::cos(kAlpha));
            finite += std::isfinite(rec.R);
            ++seen;
            // the stopping ball alone reproduces R
            if (std::isfinite(rec.R)) {
                const auto inner = restrict_to_hitting(w.hyperplanes, {c.center, rec.R});
                CHECK(stopping_radius(c.inball(), inner, cs).R == rec.R);
            }
            CHECK(stopping_set_property_test(c.inball(), w.hyperplanes, cs, 1e9));
            for (int k = 0; k < 5; ++k) {
                const double q = rng.uniform(c.inradius, 2.0 * std::min(rec.R, 100.0));
                CHECK(stopping_set_property_test(c.inball(), w.hyperplanes, cs, q));
                ++trials;
            }
            // adding a hyperplane that misses the inball never increases R
            auto more = w.hyperplanes;
            Vector u;
            rng.unit_vector(u, 2);
            more.push_back({u, c.center.dot(u) + rng.uniform(c.inradius * 1.01, 10.0)});
            CHECK(stopping_radius(c.inball(), more, cs).R <= rec.R);
        }
    }
    CHECK(finite * 10 > seen * 9);
}

TEST_CASE("stopping-ball restriction reproduces the cell") {
    const auto cs = build_cone_system(2, kAlpha);
    int checked = 0;
    for (std::uint64_t s = 0; checked < 300; ++s) {
        Rng rng(31, s);
        auto w = sample({1.0, 2, 0}, Ball{v2(0, 0), 10.0}, rng);
        auto cells = extract_cells(w, square(2.0));
        extend(w, 120.0, rng);
        for (auto c : cells) {
            c = certify_cell(c, w, cs);
            if (!c.certified) continue;
            attach_body(c, w);
            const auto inner = restrict_to_hitting(w.hyperplanes, {c.center, *c.stopping_radius});
            std::vector<Hyperplane> tuple, others;
            for (int k : c.tuple) tuple.push_back(w.hyperplanes[k]);
            for (const auto& h : inner) {
                bool in_tuple = false;
                for (const auto& t : tuple) in_tuple |= (t.u - h.u).norm() == 0 && t.r == h.r;
                if (!in_tuple) others.push_back(h);
            }
            const auto P = cell_polytope(tuple, others);
            REQUIRE(P.vertices.size() == c.body->vertices.size());
            double worst = 0;
            for (const auto& v : c.body->vertices) {
                double best = kInf;
                for (const auto& x : P.vertices) best = std::min(best, (x - v).norm());
                worst = std::max(worst, best);
            }
            CHECK(worst <= 1e-9);
            ++checked;
        }
    }
}

TEST_CASE("primed radius bound after removing pair-hitting hyperplanes") {
    const auto cs = build_cone_system(2, kAlpha);
    const double ca = std::cos(kAlpha), c3 = std::cos(3 * kAlpha);
    int pairs = 0;
    for (std::uint64_t s = 0; pairs < 2000; ++s) {
        Rng rng(41, s);
        const auto w = sample({1.0, 2, 0}, Ball{v2(0, 0), 130.0}, rng);
        const auto cells = extract_cells(w, square(15.0));
        for (std::size_t i = 0; i < cells.size(); ++i)
            for (std::size_t j = 0; j < cells.size(); ++j) {
                const auto &a = cells[i], &b = cells[j];
                const double r = std::max(a.inradius, b.inradius);
                // admissible geometry: radii small against the separation
                if (i == j || (a.center - b.center).norm() < 40.0 * r) continue;
                const double R = stopping_radius(a.inball(), w.hyperplanes, cs).R;
                if (!std::isfinite(R) || R > 100.0) continue;
                const auto kept = remove_pair_hitting(w.hyperplanes, {a.center, a.inradius / (ca * c3)},
                                                      {b.center, b.inradius / (ca * c3)});
                CHECK(primed_radius(a.center, kept, cs) <= ca / c3 * R * (1 + 1e-12));
                ++pairs;
            }
    }
}

TEST_CASE("decorrelation experiment") {
    DecorrelationOptions opt;
    opt.u_threshold = 10.0;
    opt.primed_slack = 8.0;
    opt.distances = {4.0, 10.0};
    opt.replicates = 8000;
    opt.seed = 2;
    const auto res = decorrelation_experiment(opt);
    REQUIRE(res.rows.size() == 2);
    for (const auto& r : res.rows) {
        CHECK(r.p_ab <= std::min(r.p_a, r.p_b));
        CHECK(r.ci_low <= r.ratio);
        CHECK(r.ratio <= r.ci_high);
    }
    CHECK(res.far_bounded);
    CHECK(res.far_lower);

    auto bad = opt;
    bad.distances = {0.0};
    CHECK_THROWS_AS(decorrelation_experiment(bad), PreconditionViolated);
    bad.distances = {6.0, 4.0};
    CHECK_THROWS_AS(decorrelation_experiment(bad), PreconditionViolated);
    bad.distances = {};
    CHECK_THROWS_AS(decorrelation_experiment(bad), PreconditionViolated);
    bad = opt;
    bad.replicates = 50;
    bad.u_threshold = 40.0;
    CHECK_THROWS_AS(decorrelation_experiment(bad), InsufficientSamples);
}

}
