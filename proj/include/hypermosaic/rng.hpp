#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace hypermosaic {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// xoshiro256** seeded from (master seed, stream id). Replicate i always uses
// stream i, so results do not depend on how replicates are scheduled.
// All distributions are implemented here so that streams are bit-identical
// across standard libraries.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t x = splitmix64(seed) ^ splitmix64(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
        for (auto& s : s_) {
            x = splitmix64(x);
            s = x;
        }
    }

    // a child stream, for nested experiments that need independent sub-streams
    Rng split(std::uint64_t stream) { return Rng((*this)(), stream); }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    // (0, 1), safe for logarithms
    double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift with rejection
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = uniform_open();
        const double v = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u));
        const double ang = 2.0 * std::numbers::pi * v;
        spare_ = rad * std::sin(ang);
        has_spare_ = true;
        return rad * std::cos(ang);
    }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    long poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean < 12.0) {
            // sequential inversion
            double p = std::exp(-mean);
            double cdf = p;
            const double u = uniform();
            long k = 0;
            while (u > cdf && k < 1000) {
                ++k;
                p *= mean / static_cast<double>(k);
                cdf += p;
            }
            return k;
        }
        // transformed rejection with squeeze (Hörmann, PTRS)
        const double smu = std::sqrt(mean);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform_open();
            const double us = 0.5 - std::fabs(u);
            const auto k = static_cast<long>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
            if (us >= 0.07 && v <= vr) return k;
            if (k < 0 || (us < 0.013 && v > us)) continue;
            const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
            const double rhs = -mean + static_cast<double>(k) * log_mean - std::lgamma(static_cast<double>(k) + 1.0);
            if (lhs <= rhs) return k;
        }
    }

    template <class Vec>
    void unit_vector(Vec& out, int d) {
        out.resize(d);
        if (d == 2) {
            const double ang = 2.0 * std::numbers::pi * uniform();
            out[0] = std::cos(ang);
            out[1] = std::sin(ang);
            return;
        }
        double n2 = 0.0;
        do {
            for (int i = 0; i < d; ++i) out[i] = normal();
            n2 = out.squaredNorm();
        } while (n2 < 1e-300);
        out /= std::sqrt(n2);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace hypermosaic
