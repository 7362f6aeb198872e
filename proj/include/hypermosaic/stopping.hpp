#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "hypermosaic/geometry.hpp"

namespace hypermosaic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Open cones with apex z, axis axes[i] and angular radius angular_radius,
// covering R^d. For d = 2 they are |I| = ceil(2 pi / alpha) equal sectors.
struct ConeSystem {
    int d = 2;
    double alpha = 0.0;
    double angular_radius = 0.0;
    std::vector<Vector> axes;
    std::vector<std::vector<int>> neighbors;  // N(i), includes i

    int size() const { return static_cast<int>(axes.size()); }
    // indices of the cones containing direction u (exactly one for d = 2)
    void cones_of(const Vector& u, std::vector<int>& out) const;
};

ConeSystem build_cone_system(int d, double alpha);

// Largest angle between a grid direction and its nearest axis, over a
// Fibonacci (d=3) or uniform (d=2) grid of `grid` directions.
double coverage_angle(const ConeSystem& cones, std::size_t grid);

// R_i(z, omega): distance to the nearest hyperplane whose normal, oriented
// away from z, lies in cone i; infinity if none. Hyperplanes with
// distance <= skip_within from z are ignored.
std::vector<double> cone_radii(const Vector& z, std::span<const Hyperplane> omega, const ConeSystem& cones,
                               double skip_within = -1.0);

struct StoppingRecord {
    std::vector<double> radii;  // cone radii on omega minus the hyperplanes touching B(H)
    double R = kInf;
    double R_prime = kInf;      // on the full omega
};

// Both radii for the cell with inball ib. Hyperplanes meeting the closed
// inball (the tuple) are left out of R, as required by the definition.
StoppingRecord stopping_radius(const Inball& ib, std::span<const Hyperplane> omega, const ConeSystem& cones);
double primed_radius(const Vector& z, std::span<const Hyperplane> omega, const ConeSystem& cones);

// P(R > u) for equal disjoint sectors
double btr_survival(double u, double inradius, double gamma, double alpha, int n_cones);

struct BtrRow {
    double u = 0.0, empirical = 0.0, exact = 0.0, se = 0.0;
};

// Empirical survival of R(H, eta) for a fixed triangle with inradius r and
// eta conditioned to miss B(H), on `grid_points` values of u from r/cos(alpha)
// up to the 1% quantile (d = 2, equal sectors).
std::vector<BtrRow> btr_experiment(double gamma, double inradius, double alpha, std::size_t samples,
                                   std::uint64_t seed, int grid_points = 10);

// omega ∩ H_B
std::vector<Hyperplane> restrict_to_hitting(std::span<const Hyperplane> omega, const Ball& B);
// omega minus the hyperplanes hitting both balls
std::vector<Hyperplane> remove_pair_hitting(std::span<const Hyperplane> omega, const Ball& a, const Ball& b);

// {S(H,omega) ⊆ S} <=> {S(H, omega ∩ S) ⊆ S} for S = H_{B(z(H), q)}
bool stopping_set_property_test(const Inball& ib, std::span<const Hyperplane> omega, const ConeSystem& cones, double q);

struct DecorrelationOptions {
    double gamma = 1.0;
    double u_threshold = 10.0;           // Σ(C) > u
    std::vector<double> distances;       // between the two reference points
    std::size_t replicates = 20000;
    std::uint64_t seed = 0;
    double alpha = std::numbers::pi / 12.0;
    double neighborhood = 1.0;           // inball centres within this radius of a point
    double primed_slack = 1.0;           // R' <= slack * r / (cos a cos 3a); 1 is the exact indicator
    SizeFunctional sigma = SizeFunctional::volume(2);
};

struct DecorrelationRow {
    double distance = 0.0;
    double p_a = 0.0, p_b = 0.0, p_ab = 0.0;
    double ratio = 0.0, se = 0.0, ci_low = 0.0, ci_high = 0.0;
};

struct DecorrelationResult {
    std::vector<DecorrelationRow> rows;
    bool far_bounded = false;  // ratio <= 2 + 3 se at the largest distance
    bool far_lower = false;    // ratio >= 1 - 3 se there
    bool non_increasing = false;
};

// d = 2. A_x: some cell with inball centre within `neighborhood` of x has an
// empty inball, Σ > u and R' <= slack * r(H) / (cos alpha cos 3 alpha). Estimates
// P(A_x ∩ A_y) / (P(A_x) P(A_y)) for y at each distance from x.
DecorrelationResult decorrelation_experiment(const DecorrelationOptions& opt);

}  // namespace hypermosaic
