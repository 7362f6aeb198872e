#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hypermosaic/geometry.hpp"
#include "hypermosaic/mosaic.hpp"
#include "hypermosaic/process.hpp"

namespace hypermosaic {

enum class MarkKind { zeta, xi };

struct MarkedPoint {
    Vector location;  // n^{-1/d} z(H)
    double mark = 0.0;
};

// Restriction of zeta_n or xi_n to W x (c, inf).
struct MarkedProcess {
    std::vector<MarkedPoint> points;
    double n = 1.0;
    MarkKind kind = MarkKind::zeta;
    Box window;
    double c = 0.0;
    std::size_t cells_examined = 0;  // window cells that passed the pre-filter
    std::size_t uncertified = 0;     // of those, left uncertified at the region cap

    std::size_t count() const { return points.size(); }
    // points with location in A and mark in (y1, y2]
    std::size_t count_in(const Box& A, double y1, double y2) const;
};

struct CountLaw {
    double lambda = 0.0;
    double pmf(long k) const { return poisson_pmf(k, lambda); }
};

// gamma^(2) = gamma^2 / pi in the plane
double gamma_d_planar(double gamma);

// E zeta_n(W x (c, inf)) = gamma^(d) |W| e^{-c};  E xi_n(W x (c, inf)) = gamma^(d) |W| / c
CountLaw zeta_count_law(double gamma_d, const Box& W, double c);
CountLaw xi_count_law(double gamma_d, const Box& W, double c);

// Marks 2 gamma r(H) - log n of cells centred in n^{1/d} W. Cells use the
// inball certification. Requires c + log n > 0.
MarkedProcess build_zeta_n(const ProcessParams& p, double n, const Box& W, double c, Rng& rng);

// Marks G(Σ(C)) / n; cells use the hull certification. OutOfRange when
// G cannot resolve n c. G must come from at least 1e5 cells.
MarkedProcess build_xi_n(const ProcessParams& p, double n, const Box& W, double c, const SizeFunctional& sigma,
                         const GTransform& G, Rng& rng);

// Independent replicates on streams (seed, i). Throws CertificationStarvation
// when 10% or more of the examined cells stay uncertified.
std::vector<MarkedProcess> replicate_zeta(const ProcessParams& p, double n, const Box& W, double c,
                                          std::size_t replicates, std::uint64_t seed);
std::vector<MarkedProcess> replicate_xi(const ProcessParams& p, double n, const Box& W, double c,
                                        const SizeFunctional& sigma, const GTransform& G, std::size_t replicates,
                                        std::uint64_t seed);

struct CountSummary {
    std::vector<long> counts;
    double mean = 0.0, se = 0.0;
    double fano = 0.0, fano_se = 0.0;  // se under the Poisson law: sqrt((1/lambda + 2)/n)
    double uncertified_fraction = 0.0;
};

CountSummary count_summary(std::span<const MarkedProcess> samples);

// All marks pooled, transformed to Uniform(0,1) under the limit law:
// exp(-(m - c)) for zeta, c / m for xi. Returns the KS p-value.
double mark_law_pvalue(std::span<const MarkedProcess> samples);

struct RatioEstimate {
    double ratio = 0.0, se = 0.0;
    double expected = 0.0;  // y2 / y1 (xi) or e^{y2 - y1} (zeta)
    std::size_t above_low = 0, above_high = 0;
};

// (#marks > y1) / (#marks > y2), pooled over replicates, y1 < y2
RatioEstimate mark_survival_ratio(std::span<const MarkedProcess> samples, double y1, double y2);

// ½ Σ_k |P(k) - Q(k)|
double poisson_tv(double lambda_a, double lambda_b);

struct TvResult {
    double tv = 0.0;              // plug-in ½ Σ_k |p̂_k - q_k|
    double bias_corrected = 0.0;  // 2 tv - mean of the bootstrap replicates
    double ci_low = 0.0, ci_high = 0.0;  // basic bootstrap 95% interval
    std::size_t replicates = 0;
};

// Needs at least 200 replicates. A lower-bound proxy for the process TV.
TvResult count_tv(std::span<const long> counts, const CountLaw& law, std::size_t resamples = 1000,
                  std::uint64_t seed = 0);

struct Bin {
    Box region;  // in scaled coordinates, inside W
    double y1 = 0.0, y2 = 0.0;  // mark interval (y1, y2], y2 may be infinite
};

// W split into four quadrants times mark bins (c, c+1], (c+1, inf) (zeta) or
// (c, 2c], (2c, inf) (xi).
std::vector<Bin> standard_bins(MarkKind kind, const Box& W, double c);

// gamma^(d) |A| (e^{-y1} - e^{-y2}) or gamma^(d) |A| (1/y1 - 1/y2)
double expected_bin_count(MarkKind kind, double gamma_d, const Bin& b);

struct BinRow {
    double mean = 0.0, expected = 0.0, se = 0.0, z = 0.0;
    bool pass = false;
};

struct CovarianceRow {
    std::size_t i = 0, j = 0;
    double cov = 0.0, se = 0.0, z = 0.0;
    bool pass = false;
};

struct MultibinReport {
    std::vector<BinRow> bins;
    std::vector<CovarianceRow> covariances;
    double chi_square = 0.0;  // Σ z_i^2 over bins
    bool pass = false;
};

// Per-bin means against the intensity measure and cross-bin covariances
// against 0, each at 3 sigma. Needs 500 replicates and a pooled expected
// count of at least 5 per bin.
MultibinReport multibin_poisson_test(std::span<const MarkedProcess> samples, const std::vector<Bin>& bins,
                                     double gamma_d);

struct KendallRow {
    double u = 0.0;
    std::size_t count = 0;
    double mean_theta = 0.0, se = 0.0;
    double p_theta = 0.0, p_se = 0.0;  // P(theta >= level | Σ > u)
};

struct KendallOptions {
    std::vector<double> u_grid;                     // empty: sample quantiles below
    std::vector<double> quantiles{0.5, 0.9, 0.95};
    std::size_t samples = 100000;
    double theta_level = 0.3;
    SizeFunctional sigma = SizeFunctional::volume(2);
};

struct KendallResult {
    std::vector<KendallRow> rows;
    double unconditional_mean = 0.0;
    bool strictly_decreasing = false;  // each step below by more than 3 combined se
    bool p_decreasing = false;         // within 3 combined se
};

// Conditional shape deviation of typical cells given Σ > u. Cells need bodies.
KendallResult kendall_experiment(const std::vector<CellRecord>& cells, const KendallOptions& opt);
KendallResult kendall_experiment(const ProcessParams& p, const KendallOptions& opt);

struct IsoperimetricReport {
    std::size_t checked = 0, violations = 0;
    double min_ratio = 0.0;  // min Φ / (τ Σ^{1/k})
};

// Φ(C) >= τ Σ(C)^{1/k} - slack on each cell with a body
IsoperimetricReport isoperimetric_check(const std::vector<CellRecord>& cells, const SizeFunctional& sigma,
                                        double slack = 1e-9);

struct AsymptoteRow {
    double log_n = 0.0, g_inverse = 0.0;
    double ratio = 0.0, ci_low = 0.0, ci_high = 0.0;  // log n / G^{-1}(n)^{1/k}
};

struct AsymptoteResult {
    std::vector<AsymptoteRow> rows;
    double target = 0.0;         // τ γ
    bool final_within = false;   // last ratio within [0.8, 1.2] target
    bool monotone = false;       // non-decreasing within the order-statistic CIs
};

// CI from the order statistics two binomial sd away from the quantile index.
// Needs G from at least 1e6 cells; OutOfRange for unresolvable n.
AsymptoteResult g_inverse_asymptote_check(const GTransform& G, double gamma, const SizeFunctional& sigma,
                                          const std::vector<double>& log_n = {4, 6, 8, 10, 12});

struct GCorpusOptions {
    std::size_t cells = 1000000;
    double window_side = 5.0;  // bigger windows amortise the sampling; no error bar rides on single cells
    std::uint64_t seed = 0x6C0A;
    SizeFunctional sigma = SizeFunctional::volume(2);
};

// Sizes of certified typical cells (hull rule).
EmpiricalDistribution fit_g_corpus(const ProcessParams& p, const GCorpusOptions& opt);

// Reads `path` when it exists and its sidecar `path.json` matches (gamma, d,
// seed, cells, sigma); otherwise fits and writes both.
EmpiricalDistribution load_or_fit_g_corpus(const std::string& path, const ProcessParams& p,
                                           const GCorpusOptions& opt);

}  // namespace hypermosaic
