#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hypermosaic/process.hpp"
#include "hypermosaic/stats.hpp"

using namespace hypermosaic;

namespace {

Ball ball2(double x, double y, double r) {
    Vector c(2);
    c << x, y;
    return {c, r};
}

}  // namespace

TEST_SUITE("process") {

TEST_CASE("mu of hitting sets") {
    CHECK(mu_hit(ball2(3, -1, 2.5)) == 5.0);
    CHECK(mu_hit(ball2(0, 0, 0)) == 0.0);
    CHECK(hit_count_law(ball2(7, 7, 1), 2.0) == doctest::Approx(4.0).epsilon(1e-15));
    auto sq = Polytope::from_vertices_2d({ball2(0, 0, 0).center, ball2(1, 0, 0).center, ball2(1, 1, 0).center,
                                          ball2(0, 1, 0).center});
    CHECK(hit_count_law(sq, 1.0) == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-13));
}

TEST_CASE("precondition checks") {
    CHECK_THROWS_AS(sample({0.0, 2, 1}, ball2(0, 0, 1)), PreconditionViolated);
    CHECK_THROWS_AS(sample({1.0, 1, 1}, ball2(0, 0, 1)), PreconditionViolated);
    CHECK_THROWS_AS(sample({1.0, 2, 1}, ball2(0, 0, 0)), PreconditionViolated);
}

TEST_CASE("counts are Poisson(2 gamma R)") {
    const int reps = 100000;
    std::vector<double> counts(reps);
    Rng rng(5);
    for (int i = 0; i < reps; ++i) counts[i] = static_cast<double>(sample({1.0, 2, 0}, ball2(1, 2, 3), rng).size());
    const auto m = mean_se(counts);
    CHECK(std::fabs(m.mean - 6.0) < 3 * std::sqrt(6.0 / reps));
    // variance of the sample variance of Poisson(6): (mu4 - s^4 (n-3)/(n-1)) / n
    const double var_se = std::sqrt((6.0 + 3 * 36.0 - 36.0) / reps);
    CHECK(std::fabs(m.sd * m.sd - 6.0) < 3 * var_se);
}

TEST_CASE("distances uniform, directions isotropic") {
    Rng rng(9);
    const Ball region = ball2(-2, 1, 3);
    std::vector<double> t;
    Vector usum = Vector::Zero(2);
    while (t.size() < 100000) {
        auto w = sample({1.0, 2, 0}, region, rng);
        for (const auto& h : w.hyperplanes) {
            t.push_back(h.r - region.center.dot(h.u));
            usum += h.u;
        }
    }
    const double D = ks_statistic(t, [](double x) { return std::clamp(x / 3.0, 0.0, 1.0); });
    CHECK(ks_pvalue(D, t.size()) > 0.01);
    const double se = std::sqrt(0.5 / t.size());
    CHECK(std::fabs(usum[0] / t.size()) < 3 * se);
    CHECK(std::fabs(usum[1] / t.size()) < 3 * se);

    // d = 3 directions: each coordinate has variance 1/3
    Vector s3 = Vector::Zero(3);
    std::size_t n3 = 0;
    Vector c3 = Vector::Zero(3);
    for (int i = 0; i < 2000; ++i) {
        auto w = sample({1.0, 3, 0}, {c3, 5.0}, rng);
        for (const auto& h : w.hyperplanes) s3 += h.u;
        n3 += w.size();
    }
    for (int k = 0; k < 3; ++k) CHECK(std::fabs(s3[k] / n3) < 3 * std::sqrt(1.0 / 3.0 / n3));
}

TEST_CASE("hit counts of an off-centre ball") {
    // gamma = 1.5, K of radius 0.8 inside the region: Poisson(2.4)
    Rng rng(17);
    const Ball K = ball2(1.5, -0.5, 0.8);
    const int reps = 20000;
    std::vector<double> c(reps);
    for (int i = 0; i < reps; ++i)
        c[i] = static_cast<double>(hit_count(sample({1.5, 2, 0}, ball2(0, 0, 4), rng), K));
    const auto m = mean_se(c);
    const double lambda = hit_count_law(K, 1.5);
    CHECK(lambda == doctest::Approx(2.4));
    CHECK(std::fabs(m.mean - lambda) < 3 * std::sqrt(lambda / reps));
    const double fano = m.sd * m.sd / m.mean;
    CHECK(std::fabs(fano - 1.0) < 3 * std::sqrt((1.0 / lambda + 2.0) / reps));
}

TEST_CASE("sector counts are uncorrelated") {
    Rng rng(23);
    const int reps = 20000;
    std::vector<double> a(reps), b(reps);
    for (int i = 0; i < reps; ++i) {
        auto w = sample({1.0, 2, 0}, ball2(0, 0, 2), rng);
        for (const auto& h : w.hyperplanes) {
            const double ang = std::atan2(h.u[1], h.u[0]);
            if (ang >= 0 && ang < 1.0) a[i] += 1;
            if (ang >= 2 && ang < 3.0) b[i] += 1;
        }
    }
    const auto ma = mean_se(a), mb = mean_se(b);
    double cov = 0;
    for (int i = 0; i < reps; ++i) cov += (a[i] - ma.mean) * (b[i] - mb.mean);
    cov /= reps - 1;
    const double corr = cov / (ma.sd * mb.sd);
    CHECK(std::fabs(corr) < 3.0 / std::sqrt(reps));
}

TEST_CASE("superposition") {
    Rng rng(31);
    const int reps = 20000;
    std::vector<double> merged(reps);
    for (int i = 0; i < reps; ++i) {
        auto a = sample({0.5, 2, 0}, ball2(0, 0, 2), rng);
        auto b = sample({1.25, 2, 0}, ball2(0, 0, 2), rng);
        merged[i] = static_cast<double>(a.size() + b.size());
    }
    const auto m = mean_se(merged);
    CHECK(std::fabs(m.mean - 7.0) < 3 * std::sqrt(7.0 / reps));
}

TEST_CASE("extension adds exactly the shell") {
    Rng rng(41);
    const int reps = 20000;
    std::vector<double> added(reps);
    std::size_t inside_new = 0, total_new = 0;
    for (int i = 0; i < reps; ++i) {
        auto w = sample({1.0, 2, 0}, ball2(1, 1, 2), rng);
        const auto before = w.size();
        extend(w, 5.0, rng);
        CHECK(w.region.radius == 5.0);
        added[i] = static_cast<double>(w.size() - before);
        for (std::size_t k = before; k < w.size(); ++k) {
            inside_new += hits(w.hyperplanes[k], ball2(1, 1, 2));
            total_new += hits(w.hyperplanes[k], ball2(1, 1, 5));
        }
    }
    CHECK(inside_new == 0);
    CHECK(total_new == static_cast<std::size_t>(pairwise_sum(added)));
    CHECK(std::fabs(mean_se(added).mean - 6.0) < 3 * std::sqrt(6.0 / reps));
    auto w = sample({1.0, 2, 3}, ball2(0, 0, 2));
    const auto n = w.size();
    extend(w, 1.0, rng);
    CHECK(w.size() == n);
    CHECK(w.region.radius == 2.0);
}

TEST_CASE("determinism and serialization") {
    const ProcessParams p{1.3, 3, 77};
    Vector c = Vector::Zero(3);
    auto a = sample(p, {c, 4.0});
    auto b = sample(p, {c, 4.0});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.hyperplanes[i].r == b.hyperplanes[i].r);
        CHECK(a.hyperplanes[i].u == b.hyperplanes[i].u);
    }
    std::stringstream ss;
    write_csv(a, ss);
    CHECK(ss.str().rfind("u_1,u_2,u_3,r\r\n", 0) == 0);
    auto back = read_csv(ss, p, a.region);
    REQUIRE(back.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(back.hyperplanes[i].r == a.hyperplanes[i].r);
        CHECK(back.hyperplanes[i].u == a.hyperplanes[i].u);
    }
    const auto js = sidecar_json(a);
    CHECK(js.find("\"seed\": 77") != std::string::npos);
    for (const auto& h : a.hyperplanes) CHECK(std::fabs(h.signed_distance(c)) <= 4.0);
}

}  // TEST_SUITE
