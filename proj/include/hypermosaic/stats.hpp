#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hypermosaic {

// Pairwise summation: fixed reduction order, so results are reproducible.
double pairwise_sum(std::span<const double> xs);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

inline double binomial_se(double p, std::size_t n) {
    return n ? std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n)) : 0.0;
}

// Two-sided one-sample Kolmogorov–Smirnov statistic against a continuous cdf.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
// Asymptotic p-value with Stephens' small-sample correction.
double ks_pvalue(double D, std::size_t n);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

// Ordinary least squares; weights are inverse variances when given.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});

double poisson_pmf(long k, double lambda);

// Percentile of an unsorted sample (linear interpolation between order statistics).
double quantile(std::vector<double> xs, double q);

}  // namespace hypermosaic
