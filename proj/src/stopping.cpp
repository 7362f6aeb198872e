#include "hypermosaic/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "hypermosaic/montecarlo.hpp"
#include "hypermosaic/rng.hpp"

namespace hypermosaic {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double angle_between(const Vector& a, const Vector& b) {
    return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

std::vector<Vector> icosahedral_directions(int freq) {
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    const double base[12][3] = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                                {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
    const int faces[20][3] = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                              {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                              {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    std::vector<Vector> out;
    // dedupe on rounded coordinates
    std::map<std::array<long, 3>, int> seen;
    for (const auto& f : faces)
        for (int a = 0; a <= freq; ++a)
            for (int b = 0; a + b <= freq; ++b) {
                const int c = freq - a - b;
                Vector v(3);
                for (int k = 0; k < 3; ++k) v[k] = a * base[f[0]][k] + b * base[f[1]][k] + c * base[f[2]][k];
                v.normalize();
                std::array<long, 3> key{std::lround(v[0] * 1e9), std::lround(v[1] * 1e9), std::lround(v[2] * 1e9)};
                if (seen.emplace(key, 0).second) out.push_back(v);
            }
    return out;
}

Vector fibonacci_direction(std::size_t i, std::size_t n) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    Vector v(3);
    v << rho * std::cos(golden * static_cast<double>(i)), rho * std::sin(golden * static_cast<double>(i)), z;
    return v;
}

}  // namespace

void ConeSystem::cones_of(const Vector& u, std::vector<int>& out) const {
    out.clear();
    if (d == 2) {
        double ang = std::atan2(u[1], u[0]);
        if (ang < 0) ang += kTwoPi;
        int i = static_cast<int>(ang / kTwoPi * size());
        out.push_back(std::clamp(i, 0, size() - 1));
        return;
    }
    const double c = std::cos(angular_radius);
    for (int i = 0; i < size(); ++i)
        if (u.dot(axes[i]) > c) out.push_back(i);
}

ConeSystem build_cone_system(int d, double alpha) {
    if (!(alpha > 0.0 && alpha < std::numbers::pi / 6.0)) throw PreconditionViolated("alpha must lie in (0, pi/6)");
    ConeSystem cs;
    cs.d = d;
    cs.alpha = alpha;
    cs.angular_radius = alpha / 2.0;
    if (d == 2) {
        const int n = static_cast<int>(std::ceil(kTwoPi / alpha - 1e-12));
        const double width = kTwoPi / n;
        for (int i = 0; i < n; ++i) {
            Vector a(2);
            a << std::cos((i + 0.5) * width), std::sin((i + 0.5) * width);
            cs.axes.push_back(a);
            cs.neighbors.push_back({(i + n - 1) % n, i, (i + 1) % n});
        }
        return cs;
    }
    if (d != 3) throw DimensionUnsupported("cone systems are implemented for d = 2, 3");
    // coarsest icosahedral subdivision whose covering angle, measured on a
    // grid and padded by the grid spacing, stays below alpha/2
    constexpr std::size_t grid = 100000;
    const double spacing = std::sqrt(4.0 * std::numbers::pi / grid);
    for (int freq = 1; freq <= 64; ++freq) {
        cs.axes = icosahedral_directions(freq);
        if (coverage_angle(cs, grid) + spacing < cs.angular_radius) break;
        if (freq == 64) throw CoverageFailure("icosahedral subdivision did not cover the sphere");
    }
    const int n = cs.size();
    cs.neighbors.assign(n, {});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (angle_between(cs.axes[i], cs.axes[j]) < alpha) cs.neighbors[i].push_back(j);
    return cs;
}

double coverage_angle(const ConeSystem& cones, std::size_t grid) {
    double worst = 0.0;
    if (cones.d == 2) {
        // sector boundaries are the worst points; check them and a grid
        for (std::size_t k = 0; k < grid; ++k) {
            const double ang = kTwoPi * static_cast<double>(k) / static_cast<double>(grid);
            Vector u(2);
            u << std::cos(ang), std::sin(ang);
            std::vector<int> idx;
            cones.cones_of(u, idx);
            worst = std::max(worst, angle_between(u, cones.axes[idx[0]]));
        }
        return worst;
    }
    for (std::size_t k = 0; k < grid; ++k) {
        const Vector u = fibonacci_direction(k, grid);
        double best = -1.0;
        for (const auto& a : cones.axes) best = std::max(best, u.dot(a));
        worst = std::max(worst, std::acos(std::clamp(best, -1.0, 1.0)));
    }
    return worst;
}

std::vector<double> cone_radii(const Vector& z, std::span<const Hyperplane> omega, const ConeSystem& cones,
                               double skip_within) {
    std::vector<double> R(cones.size(), kInf);
    std::vector<int> idx;
    Vector u;
    for (const auto& h : omega) {
        const double s = h.r - z.dot(h.u);
        const double rho = std::fabs(s);
        if (rho <= skip_within || rho == 0.0) continue;
        u = s > 0 ? h.u : Vector(-h.u);
        cones.cones_of(u, idx);
        for (int i : idx) R[i] = std::min(R[i], rho);
    }
    return R;
}

double primed_radius(const Vector& z, std::span<const Hyperplane> omega, const ConeSystem& cones) {
    const auto R = cone_radii(z, omega, cones);
    double worst = 0.0;
    for (int i = 0; i < cones.size(); ++i) {
        double m = kInf;
        for (int j : cones.neighbors[i]) m = std::min(m, R[j]);
        worst = std::max(worst, m);
    }
    return worst / std::cos(3.0 * cones.alpha);
}

StoppingRecord stopping_radius(const Inball& ib, std::span<const Hyperplane> omega, const ConeSystem& cones) {
    StoppingRecord rec;
    // tangent tuple hyperplanes sit at distance r up to round-off
    rec.radii = cone_radii(ib.center, omega, cones, ib.radius * (1.0 + 1e-9) + 1e-12);
    rec.R = *std::max_element(rec.radii.begin(), rec.radii.end()) / std::cos(cones.alpha);
    rec.R_prime = primed_radius(ib.center, omega, cones);
    return rec;
}

double btr_survival(double u, double inradius, double gamma, double alpha, int n_cones) {
    const double x = u * std::cos(alpha) - inradius;
    if (x <= 0.0) return 1.0;
    const double p = std::exp(-2.0 * gamma * x / n_cones);
    // 1 - (1 - p)^n without cancellation
    return -std::expm1(n_cones * std::log1p(-p));
}

std::vector<BtrRow> btr_experiment(double gamma, double inradius, double alpha, std::size_t samples,
                                   std::uint64_t seed, int grid_points) {
    if (grid_points < 2) throw PreconditionViolated("need at least two grid points");
    const auto cones = build_cone_system(2, alpha);
    const int n = cones.size();
    const double ca = std::cos(alpha);
    const double lo = inradius / ca;
    // survival 0.01: (1 - p)^n = 0.99
    const double p01 = -std::expm1(std::log(0.99) / n);
    const double hi = (inradius - n * std::log(p01) / (2.0 * gamma)) / ca;
    std::vector<double> grid(grid_points);
    for (int k = 0; k < grid_points; ++k) grid[k] = lo + (hi - lo) * k / (grid_points - 1);
    const double reach = hi * ca + 1.0;
    const Vector zero = Vector::Zero(2);
    const auto m = mc_means(grid.size(), samples, seed, [&](Rng& rng, std::span<double> out) {
        Inball ib{zero, inradius, {}};
        std::vector<Hyperplane> omega;
        const double t0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int k = 0; k < 3; ++k) {
            Vector u(2);
            u << std::cos(t0 + 2.0 * std::numbers::pi * k / 3.0), std::sin(t0 + 2.0 * std::numbers::pi * k / 3.0);
            omega.push_back({u, inradius});
        }
        // the rest of eta restricted to hyperplanes missing B(H)
        const long count = rng.poisson(2.0 * gamma * (reach - inradius));
        Vector u;
        for (long k = 0; k < count; ++k) {
            rng.unit_vector(u, 2);
            omega.push_back({u, rng.uniform(inradius, reach)});
        }
        const double R = stopping_radius(ib, omega, cones).R;
        for (std::size_t k = 0; k < grid.size(); ++k) out[k] = R > grid[k];
    });
    std::vector<BtrRow> rows;
    for (std::size_t k = 0; k < grid.size(); ++k)
        rows.push_back({grid[k], m[k].mean, btr_survival(grid[k], inradius, gamma, alpha, n), m[k].se});
    return rows;
}

std::vector<Hyperplane> restrict_to_hitting(std::span<const Hyperplane> omega, const Ball& B) {
    std::vector<Hyperplane> out;
    for (const auto& h : omega)
        if (hits(h, B)) out.push_back(h);
    return out;
}

std::vector<Hyperplane> remove_pair_hitting(std::span<const Hyperplane> omega, const Ball& a, const Ball& b) {
    std::vector<Hyperplane> out;
    for (const auto& h : omega)
        if (!(hits(h, a) && hits(h, b))) out.push_back(h);
    return out;
}

bool stopping_set_property_test(const Inball& ib, std::span<const Hyperplane> omega, const ConeSystem& cones,
                                double q) {
    const double full = stopping_radius(ib, omega, cones).R;
    const auto restricted = restrict_to_hitting(omega, {ib.center, q});
    const double part = stopping_radius(ib, restricted, cones).R;
    return (full <= q) == (part <= q);
}

}  // namespace hypermosaic
