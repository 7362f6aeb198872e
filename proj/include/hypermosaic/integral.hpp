#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hypermosaic/geometry.hpp"
#include "hypermosaic/quadrature.hpp"
#include "hypermosaic/stats.hpp"

namespace hypermosaic {

// sigma({u : lo <= <u, e> <= hi}) for a fixed unit vector e, i.e.
// (omega_{d-1}/omega_d) ∫_lo^hi (1 - x^2)^{(d-3)/2} dx with limits clipped to [-1, 1].
// Integrated in x = sin(theta), where the integrand becomes cos^{d-2}(theta).
double slice_integral(int d, double lo, double hi);

// Fraction of directions u for which H(u, <z,u> + r) hits B(w, s).
double directional_hit_integral(const Vector& w, const Vector& z, double r, double s);

// mu(hyperplanes hitting both B(z,r) and B(w,s)) for disjoint balls
// (r + s <= |w - z|), by nested quadrature.
double pair_hit_measure(const Vector& z, double r, const Vector& w, double s);
// Closed form 2rs/|w - z|, valid in d = 3 only.
double pair_hit_measure_d3(const Vector& z, double r, const Vector& w, double s);
// Same measure without the disjointness requirement.
double pair_hit_measure_general(const Vector& z, double r, const Vector& w, double s);

double L_of_a(double a, int d);

struct FixedPointResult {
    int d = 0;
    double delta_star = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

// delta = (omega_{d-1}/omega_d) ∫_{(2+delta)/(3+delta)}^1 (1-x^2)^{(d-3)/2} dx
FixedPointResult delta_star(int d);

// Test function for the two-sided integral identity. f must vanish unless the
// inball centre lies in B(center, center_radius) and the inradius is at most r_max.
struct BpTestFunction {
    std::function<double(std::span<const Hyperplane>)> f;
    Vector center;
    double center_radius = 0.0;
    double r_max = 0.0;
};

// f = 1{z(H) in [0,1]^d} 1{r(H) <= 1}
BpTestFunction bp_box_indicator(int d);
BpTestFunction bp_zero(int d);

struct BpResult {
    double lhs = 0.0, lhs_se = 0.0;
    double rhs = 0.0, rhs_se = 0.0;
    double sigma = 0.0;  // pooled standard error of lhs - rhs
    bool agree = false;  // |lhs - rhs| <= 3 sigma
};

BpResult bp_verify(int ell, int d, const BpTestFunction& f, std::size_t samples, std::uint64_t seed);

struct DecayPoint {
    double R = 0.0, estimate = 0.0, se = 0.0;
};

struct DecayResult {
    char variant = 'a';
    double gamma = 1.0, a = 0.0;
    std::vector<DecayPoint> table;
    LinearFit fit;
    double target_slope = 0.0;  // -2 gamma, or -2 gamma a (2 - L(a))
    double tolerance = 0.2;
    bool below_bound = false;  // slope <= target + tolerance
    bool within_band = false;  // |slope - target| <= tolerance
};

// Pair integrals bounding the expected number of pairs of large cells (d = 2,
// no shared hyperplanes), estimated by importance sampling on a grid of R,
// followed by a weighted fit of log(estimate) against R.
// Variant a: both centres in [0,1]^2, max inradius > R.
// Variant b: inradii in (aR, R], r + r' <= |z - z'| <= D with D = d_factor * R (4a when d_factor <= 0).
DecayResult decay_check_le1(char variant, const std::vector<double>& R_grid, std::size_t samples, std::uint64_t seed,
                            double gamma = 1.0, double a = 1.0 / 3.0, double d_factor = 0.0,
                            double tolerance = 0.2);

enum class ETerm { E2, E5, E6 };

struct ETermResult {
    ETerm term = ETerm::E2;
    double n = 0.0, c = 0.0;
    double estimate = 0.0, sigma = 0.0;
    // E5 only: the part with max inradius above (2 + delta*) (c + log n) / (2 gamma), and the rest
    double split_high = 0.0, split_high_sigma = 0.0, split_low = 0.0, split_low_sigma = 0.0;
};

// Monte Carlo estimate of the E2/E5/E6 pair integrals of the Poisson
// approximation bound for the inradius process (d = 2, window n^{1/2} W).
ETermResult e_term_estimate(ETerm term, double n, double c, const Box& W, std::size_t samples, std::uint64_t seed,
                            double gamma = 1.0);

const char* e_term_name(ETerm t);

}  // namespace hypermosaic
