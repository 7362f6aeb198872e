#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hypermosaic/geometry.hpp"
#include "hypermosaic/montecarlo.hpp"
#include "hypermosaic/parallel.hpp"
#include "hypermosaic/rng.hpp"
#include "hypermosaic/stats.hpp"

using namespace hypermosaic;

TEST_SUITE("support") {

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        CHECK(x != c());
        CHECK(x != d());
    }
}

TEST_CASE("rng distributions") {
    Rng rng(1);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, se = 0, sp = 0, sp2 = 0;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) {
        u[i] = rng.uniform();
        su += u[i];
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        se += rng.exponential(2.0);
        const double k = static_cast<double>(rng.poisson(30.0));
        sp += k;
        sp2 += k * k;
    }
    CHECK(std::fabs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(std::fabs(sn / n) < 4 / std::sqrt(n));
    CHECK(std::fabs(sn2 / n - 1) < 4 * std::sqrt(2.0 / n));
    CHECK(std::fabs(se / n - 0.5) < 4 * 0.5 / std::sqrt(n));
    CHECK(std::fabs(sp / n - 30) < 4 * std::sqrt(30.0 / n));
    CHECK(std::fabs(sp2 / n - (sp / n) * (sp / n) - 30) < 1.0);
    CHECK(ks_pvalue(ks_statistic(u, [](double x) { return std::clamp(x, 0.0, 1.0); }), u.size()) > 1e-3);
    // small-mean Poisson against its pmf
    std::vector<double> freq(8, 0.0);
    for (int i = 0; i < n; ++i) {
        const long k = rng.poisson(1.5);
        if (k < 8) freq[k] += 1.0 / n;
    }
    for (long k = 0; k < 8; ++k) CHECK(std::fabs(freq[k] - poisson_pmf(k, 1.5)) < 5 * binomial_se(poisson_pmf(k, 1.5), n) + 1e-9);
    CHECK(rng.poisson(0.0) == 0);
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

TEST_CASE("unit vectors are unit and isotropic") {
    Rng rng(2);
    for (int d : {2, 3, 5}) {
        Vector mean = Vector::Zero(d), v;
        const int n = 50000;
        for (int i = 0; i < n; ++i) {
            rng.unit_vector(v, d);
            REQUIRE(std::fabs(v.norm() - 1) < 1e-12);
            mean += v;
        }
        CHECK((mean / n).norm() < 5 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("statistics helpers") {
    const std::vector<double> xs{1, 2, 3, 4};
    const auto m = mean_se(xs);
    CHECK(m.mean == 2.5);
    CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2));
    CHECK(quantile(xs, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(xs, 0.0) == 1.0);
    CHECK(quantile(xs, 1.0) == 4.0);
    CHECK(binomial_se(0.5, 100) == doctest::Approx(0.05));
    CHECK(binomial_se(0.5, 0) == 0.0);
    // pairwise summation keeps 1 + many tiny terms exact to rounding
    std::vector<double> tiny(1 << 20, 1e-16);
    tiny[0] = 1.0;
    CHECK(pairwise_sum(tiny) == doctest::Approx(1.0 + (tiny.size() - 1) * 1e-16).epsilon(1e-15));
    double total = 0;
    for (long k = 0; k < 60; ++k) total += poisson_pmf(k, 4.2);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(poisson_pmf(-1, 1.0) == 0.0);
    CHECK(poisson_pmf(0, 0.0) == 1.0);
}

TEST_CASE("weighted linear fit recovers a line") {
    const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9}, w{1, 2, 1, 2, 1};
    const auto f = linear_fit(x, y, w);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    // weights are inverse variances: se = 1 / sqrt(Σ w (x - x̄_w)^2) = 1 / sqrt(12)
    CHECK(f.slope_se == doctest::Approx(1.0 / std::sqrt(12.0)));
}

TEST_CASE("ks statistic on a known sample") {
    // sample {0.5} against U(0,1): D = 0.5
    CHECK(ks_statistic({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
    CHECK(ks_pvalue(0.0, 100) == doctest::Approx(1.0));
    CHECK(ks_pvalue(0.5, 1000) < 1e-10);
}

TEST_CASE("parallel results do not depend on the thread count") {
    const auto before = thread_count();
    std::vector<double> results;
    for (unsigned t : {1u, 2u, 4u}) {
        set_thread_count(t);
        std::vector<int> hit(1000, 0);
        parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; });
        for (int h : hit) REQUIRE(h == 1);
        const auto m = mc_mean(10007, 9, [](Rng& rng) { return rng.normal(); });
        results.push_back(m.mean);
    }
    CHECK(results[0] == results[1]);
    CHECK(results[0] == results[2]);
    set_thread_count(before);
}

}
