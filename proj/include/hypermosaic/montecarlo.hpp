#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hypermosaic/parallel.hpp"
#include "hypermosaic/rng.hpp"
#include "hypermosaic/stats.hpp"

namespace hypermosaic {

// Samples are split into a fixed number of blocks with their own streams, so
// the estimate is the same for any thread count.
inline constexpr std::size_t kMcBlocks = 64;

// draw(rng, out) writes `width` per-sample values; returns their means and
// standard errors.
template <class Draw>
std::vector<MeanSe> mc_means(std::size_t width, std::size_t samples, std::uint64_t seed, Draw&& draw) {
    struct Acc {
        std::vector<double> sum, sumsq;
    };
    std::vector<Acc> blocks(kMcBlocks);
    parallel_for(kMcBlocks, [&](std::size_t b) {
        Rng rng(seed, 0x5EED0000ULL + b);
        const std::size_t lo = samples * b / kMcBlocks, hi = samples * (b + 1) / kMcBlocks;
        std::vector<double> out(width), sum(width, 0.0), sumsq(width, 0.0);
        for (std::size_t i = lo; i < hi; ++i) {
            std::fill(out.begin(), out.end(), 0.0);
            draw(rng, std::span<double>(out));
            for (std::size_t k = 0; k < width; ++k) {
                sum[k] += out[k];
                sumsq[k] += out[k] * out[k];
            }
        }
        blocks[b] = {std::move(sum), std::move(sumsq)};
    });
    std::vector<MeanSe> res(width);
    const double n = static_cast<double>(samples);
    for (std::size_t k = 0; k < width; ++k) {
        std::vector<double> s(kMcBlocks), q(kMcBlocks);
        for (std::size_t b = 0; b < kMcBlocks; ++b) {
            s[b] = blocks[b].sum[k];
            q[b] = blocks[b].sumsq[k];
        }
        const double mean = pairwise_sum(s) / n;
        const double var = samples > 1 ? std::max(pairwise_sum(q) / n - mean * mean, 0.0) * n / (n - 1) : 0.0;
        res[k] = {mean, std::sqrt(var / n), std::sqrt(var), samples};
    }
    return res;
}

template <class Draw>
MeanSe mc_mean(std::size_t samples, std::uint64_t seed, Draw&& draw) {
    return mc_means(1, samples, seed, [&](Rng& rng, std::span<double> out) { out[0] = draw(rng); })[0];
}

}  // namespace hypermosaic
