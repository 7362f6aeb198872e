#include "hypermosaic/integral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hypermosaic/montecarlo.hpp"
#include "hypermosaic/optimize.hpp"
#include "hypermosaic/rng.hpp"

namespace hypermosaic {

namespace {

constexpr double kPi = std::numbers::pi;

// ∫ over (d+1)-tuples of g(z(H), r(H)) dmu^{d+1} = kTupleConstant2 ∫∫ g dz dr in the plane
constexpr double kTupleConstant2 = 12.0 / kPi;

double omega_ratio(int d) { return omega(d - 1) / omega(d); }

double cos_power_integral(int d, double t0, double t1) {
    const int p = d - 2;
    return integrate([p](double t) { return std::pow(std::cos(t), p); }, t0, t1).value;
}

}  // namespace

double slice_integral(int d, double lo, double hi) {
    if (d < 2) throw PreconditionViolated("slice integral needs d >= 2");
    lo = std::clamp(lo, -1.0, 1.0);
    hi = std::clamp(hi, -1.0, 1.0);
    if (!(hi > lo)) return 0.0;
    if (d == 2) return (std::asin(hi) - std::asin(lo)) / kPi;
    if (d == 3) return 0.5 * (hi - lo);
    return omega_ratio(d) * cos_power_integral(d, std::asin(lo), std::asin(hi));
}

double directional_hit_integral(const Vector& w, const Vector& z, double r, double s) {
    if (w.size() != z.size()) throw PreconditionViolated("dimension mismatch");
    if (!(r > 0.0) || !(s > 0.0)) throw PreconditionViolated("radii must be positive");
    const double D = (w - z).norm();
    if (!(D > 0.0)) throw PreconditionViolated("w must differ from z");
    return slice_integral(static_cast<int>(z.size()), (r - s) / D, (r + s) / D);
}

double pair_hit_measure(const Vector& z, double r, const Vector& w, double s) {
    if (w.size() != z.size()) throw PreconditionViolated("dimension mismatch");
    if (r < 0.0 || s < 0.0) throw PreconditionViolated("negative radius");
    const double D = (w - z).norm();
    if (r + s > D * (1.0 + 1e-12)) throw PreconditionViolated("balls overlap: r + s > |w - z|");
    if (s == 0.0 || r == 0.0) return 0.0;
    const int d = static_cast<int>(z.size());
    return 2.0 * integrate([&](double t) { return slice_integral(d, (t - r) / D, (t + r) / D); }, 0.0, s).value;
}

double pair_hit_measure_d3(const Vector& z, double r, const Vector& w, double s) {
    if (z.size() != 3 || w.size() != 3) throw DimensionUnsupported("closed form holds for d = 3");
    const double D = (w - z).norm();
    if (r + s > D * (1.0 + 1e-12)) throw PreconditionViolated("balls overlap: r + s > |w - z|");
    return 2.0 * r * s / D;
}

double pair_hit_measure_general(const Vector& z, double r, const Vector& w, double s) {
    if (w.size() != z.size()) throw PreconditionViolated("dimension mismatch");
    if (r < 0.0 || s < 0.0) throw PreconditionViolated("negative radius");
    const double D = (w - z).norm();
    const double m = std::min(r, s);
    if (!(D > 0.0)) return 2.0 * m;
    const double ta = std::asin(std::min(1.0, std::fabs(r - s) / D));
    const double tb = std::asin(std::min(1.0, (r + s) / D));
    const int d = static_cast<int>(z.size());
    if (d == 2)
        return 2.0 / kPi * (2.0 * m * ta + (r + s) * (tb - ta) + D * (std::cos(tb) - std::cos(ta)));
    // overlap length of [-r, r] and [y - s, y + s], integrated against cos^{d-2}
    auto overlap = [&](double t) {
        const double y = D * std::sin(t);
        return std::max(0.0, std::min(r, y + s) - std::max(-r, y - s)) * std::pow(std::cos(t), d - 2);
    };
    double total = integrate(overlap, 0.0, ta).value + integrate(overlap, ta, tb).value;
    return 2.0 * omega_ratio(d) * total;
}

double L_of_a(double a, int d) {
    if (!(a > 0.0 && a <= 1.0)) throw PreconditionViolated("L(a) needs 0 < a <= 1");
    return slice_integral(d, -1.0 / (1.0 + a), 1.0);
}

FixedPointResult delta_star(int d) {
    if (d < 2) throw PreconditionViolated("delta* needs d >= 2");
    auto g = [d](double t) { return t - slice_integral(d, (2.0 + t) / (3.0 + t), 1.0); };
    const RootResult root = bisect(g, 1e-12, 1.0 - 1e-12);
    FixedPointResult out{d, root.x, root.residual, root.iterations};
    if (!(out.residual <= 1e-12)) throw NoRoot("fixed-point residual above 1e-12");
    if (!(out.delta_star > 0.0 && out.delta_star < 1.0 / d)) throw NoRoot("fixed point outside (0, 1/d)");
    return out;
}

BpTestFunction bp_box_indicator(int d) {
    BpTestFunction t;
    t.f = [](std::span<const Hyperplane> tuple) {
        const auto ib = inball_nullspace<double>(tuple);
        if (!ib || ib->radius > 1.0) return 0.0;
        for (int i = 0; i < ib->center.size(); ++i)
            if (ib->center[i] < 0.0 || ib->center[i] > 1.0) return 0.0;
        return 1.0;
    };
    t.center = Vector::Constant(d, 0.5);
    t.center_radius = std::sqrt(static_cast<double>(d)) / 2.0;
    t.r_max = 1.0;
    return t;
}

BpTestFunction bp_zero(int d) {
    BpTestFunction t = bp_box_indicator(d);
    t.f = [](std::span<const Hyperplane>) { return 0.0; };
    return t;
}

namespace {

void uniform_in_ball(Rng& rng, Vector& out, int k) {
    rng.unit_vector(out, k);
    out *= std::pow(rng.uniform(), 1.0 / k);
}

}  // namespace

BpResult bp_verify(int ell, int d, const BpTestFunction& F, std::size_t samples, std::uint64_t seed) {
    if (d < 2 || d > 6) throw DimensionUnsupported("bp_verify supports 2 <= d <= 6");
    if (ell < 1 || ell > d) throw PreconditionViolated("need 1 <= l <= d");
    if (samples < 2) throw InsufficientSamples("need at least two samples");
    const double R0 = F.center_radius + F.r_max;
    const double box = 2.0 * R0;
    double fact = 1.0;
    for (int i = 2; i <= d; ++i) fact *= i;
    const double jacobian = std::pow(2.0, d + 1) * fact;

    const MeanSe lhs = mc_mean(samples, seed, [&](Rng& rng) {
        std::array<Hyperplane, kMaxDim + 1> t;
        for (int i = 0; i <= d; ++i) {
            rng.unit_vector(t[i].u, d);
            t[i].r = F.center.dot(t[i].u) + rng.uniform(-R0, R0);
        }
        return std::pow(box, d + 1) * F.f(std::span<const Hyperplane>(t.data(), d + 1));
    });

    const MeanSe rhs = mc_mean(samples, seed ^ 0xB1A5C4E7ULL, [&](Rng& rng) {
        std::array<Hyperplane, kMaxDim + 1> t;
        Matrix U(ell, d), V(d, d + 1);
        Vector b(ell);
        for (int i = 0; i < ell; ++i) {
            rng.unit_vector(t[i].u, d);
            t[i].r = F.center.dot(t[i].u) + rng.uniform(-R0, R0);
            const double sgn = rng.uniform() < 0.5 ? -1.0 : 1.0;
            V.col(i) = sgn * t[i].u;
            U.row(i) = V.col(i).transpose();
        }
        const double r = rng.uniform(0.0, F.r_max);
        for (int i = 0; i < ell; ++i) b[i] = (U.row(i).dot(t[i].u) > 0 ? t[i].r : -t[i].r) - r;
        Vector ui;
        for (int i = ell; i <= d; ++i) {
            rng.unit_vector(ui, d);
            V.col(i) = ui;
        }
        if (!positively_spanning<double>(V)) return 0.0;
        // point of the flat {<x, u_i> = b_i} closest to the centre of the support
        const Matrix G = U * U.transpose();
        const Vector p = F.center + U.transpose() * G.ldlt().solve(b - U * F.center);
        const double dist2 = (p - F.center).squaredNorm();
        const double rho2 = F.center_radius * F.center_radius - dist2;
        if (!(rho2 > 0.0)) return 0.0;
        const int k = d - ell;
        Vector z = p;
        double flat_volume = 1.0;
        if (k > 0) {
            const double rho = std::sqrt(rho2);
            Eigen::HouseholderQR<Matrix> qr(U.transpose());
            const Matrix Q = qr.householderQ();
            Vector y;
            uniform_in_ball(rng, y, k);
            z += rho * Q.rightCols(k) * y;
            flat_volume = kappa(k) * std::pow(rho, k);
        }
        std::array<Vector, kMaxDim + 1> us;
        for (int i = 0; i <= d; ++i) us[i] = V.col(i);
        const double delta = simplex_volume_delta<double>(std::span<const Vector>(us.data(), d + 1));
        const double nabla = parallelepiped_volume_nabla<double>(std::span<const Vector>(us.data(), ell));
        if (!(nabla > 0.0)) return 0.0;
        for (int i = ell; i <= d; ++i) t[i] = {V.col(i), z.dot(V.col(i)) + r};
        const double fv = F.f(std::span<const Hyperplane>(t.data(), d + 1));
        if (fv == 0.0) return 0.0;
        return jacobian * std::pow(box, ell) * F.r_max * flat_volume * delta / nabla * fv;
    });

    BpResult out;
    out.lhs = lhs.mean;
    out.lhs_se = lhs.se;
    out.rhs = rhs.mean;
    out.rhs_se = rhs.se;
    out.sigma = std::hypot(lhs.se, rhs.se);
    const double scale = std::max(std::fabs(out.lhs), std::fabs(out.rhs));
    if (scale > 0.0 && out.sigma > 0.25 * scale) throw InsufficientSamples("standard error too large to compare");
    out.agree = std::fabs(out.lhs - out.rhs) <= 3.0 * out.sigma;
    return out;
}

namespace {

// inverse-cdf draw from Exp(rate) truncated to [0, width]
double truncated_exponential(Rng& rng, double rate, double width, double& mass) {
    mass = -std::expm1(-rate * width);
    return -std::log1p(-rng.uniform() * mass) / rate;
}

Vector uniform_in_box(Rng& rng, const Box& W) {
    Vector z(W.dim());
    for (int i = 0; i < W.dim(); ++i) z[i] = rng.uniform(W.lo[i], W.hi[i]);
    return z;
}

Vector point2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}

}  // namespace

DecayResult decay_check_le1(char variant, const std::vector<double>& R_grid, std::size_t samples, std::uint64_t seed,
                            double gamma, double a, double d_factor, double tolerance) {
    if (variant != 'a' && variant != 'b') throw PreconditionViolated("variant must be 'a' or 'b'");
    if (R_grid.size() < 2) throw InsufficientSamples("a slope needs at least two grid points");
    for (std::size_t i = 1; i < R_grid.size(); ++i)
        if (!(R_grid[i] > R_grid[i - 1])) throw PreconditionViolated("R grid must be increasing");
    if (!(gamma > 0.0)) throw PreconditionViolated("gamma must be positive");
    if (variant == 'b' && !(a > 0.0 && a < 1.0)) throw PreconditionViolated("need 0 < a < 1");
    if (d_factor <= 0.0) d_factor = 4.0 * a;

    const Box W{point2(0, 0), point2(1, 1)};
    const double C = kTupleConstant2;
    DecayResult out;
    out.variant = variant;
    out.gamma = gamma;
    out.a = a;
    out.tolerance = tolerance;
    out.target_slope = variant == 'a' ? -2.0 * gamma : -2.0 * gamma * a * (2.0 - L_of_a(a, 2));

    for (std::size_t g = 0; g < R_grid.size(); ++g) {
        const double R = R_grid[g];
        MeanSe est;
        if (variant == 'a') {
            est = mc_mean(samples, seed + 7919 * g, [&](Rng& rng) {
                const Vector z = uniform_in_box(rng, W), w = uniform_in_box(rng, W);
                const double M = R + rng.exponential(2.0 * gamma);
                const double m = rng.uniform(0.0, M);
                const double cap = pair_hit_measure_general(z, M, w, m);
                return C * C * M * std::exp(-2.0 * gamma * R - gamma * (2.0 * m - cap)) / gamma;
            });
        } else {
            const double D = d_factor * R;
            est = mc_mean(samples, seed + 7919 * g, [&](Rng& rng) {
                const Vector z = uniform_in_box(rng, W);
                double m1, m2, m3;
                const double r = a * R + truncated_exponential(rng, 2.0 * gamma, (1.0 - a) * R, m1);
                const double s = a * R + truncated_exponential(rng, 2.0 * gamma, (1.0 - a) * R, m2);
                if (r + s > D) return 0.0;
                const double rho = r + s + truncated_exponential(rng, gamma, D - r - s, m3);
                const double phi = rng.uniform(0.0, 2.0 * kPi);
                const Vector w = z + rho * point2(std::cos(phi), std::sin(phi));
                const double cap = pair_hit_measure_general(z, r, w, s);
                // densities: 2g e^{-2g(r-aR)}/m1, 2g e^{-2g(s-aR)}/m2, g e^{-g(rho-r-s)}/m3, 1/(2 pi)
                const double log_w = -gamma * (2.0 * r + 2.0 * s - cap) + 2.0 * gamma * (r - a * R) +
                                     2.0 * gamma * (s - a * R) + gamma * (rho - r - s);
                return C * C * W.volume() * 2.0 * kPi * rho * m1 * m2 * m3 * std::exp(log_w) /
                       (4.0 * gamma * gamma * gamma);
            });
        }
        if (!(est.mean > 0.0) || est.se > 0.5 * est.mean)
            throw InsufficientSamples("estimate not resolved at R = " + std::to_string(R));
        out.table.push_back({R, est.mean, est.se});
    }
    std::vector<double> x, y, w;
    for (const auto& p : out.table) {
        x.push_back(p.R);
        y.push_back(std::log(p.estimate));
        w.push_back(std::pow(p.estimate / p.se, 2));
    }
    out.fit = linear_fit(x, y, w);
    out.below_bound = out.fit.slope <= out.target_slope + tolerance;
    out.within_band = std::fabs(out.fit.slope - out.target_slope) <= tolerance;
    return out;
}

const char* e_term_name(ETerm t) {
    switch (t) {
        case ETerm::E2: return "E2";
        case ETerm::E5: return "E5";
        case ETerm::E6: return "E6";
    }
    return "?";
}

namespace {

struct Tangent3 {
    std::array<Vector, 3> u;
    double delta = 0.0;  // Delta_2(u) 1_P(u)
};

Tangent3 draw_directions(Rng& rng) {
    Tangent3 t;
    Matrix V(2, 3);
    for (int i = 0; i < 3; ++i) {
        rng.unit_vector(t.u[i], 2);
        V.col(i) = t.u[i];
    }
    if (positively_spanning<double>(V)) t.delta = simplex_volume_delta<double>(std::span<const Vector>(t.u.data(), 3));
    return t;
}

// chord of the line {<x, u> = b} inside the box; returns its length and a uniform point on it
double chord_in_box(const Box& B, const Vector& u, double b, Rng& rng, Vector& point) {
    const Vector p0 = b * u;
    const Vector e = point2(-u[1], u[0]);
    double lo = -1e300, hi = 1e300;
    for (int i = 0; i < 2; ++i) {
        if (std::fabs(e[i]) < 1e-15) {
            if (p0[i] < B.lo[i] || p0[i] > B.hi[i]) return 0.0;
            continue;
        }
        double t0 = (B.lo[i] - p0[i]) / e[i], t1 = (B.hi[i] - p0[i]) / e[i];
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
    }
    if (!(hi > lo)) return 0.0;
    point = p0 + rng.uniform(lo, hi) * e;
    return hi - lo;
}

}  // namespace

ETermResult e_term_estimate(ETerm term, double n, double c, const Box& W, std::size_t samples, std::uint64_t seed,
                            double gamma) {
    if (W.dim() != 2) throw DimensionUnsupported("E-term estimates are implemented for d = 2");
    if (!(gamma > 0.0)) throw PreconditionViolated("gamma must be positive");
    if (!(n > 0.0) || !(c + std::log(n) > 0.0)) throw PreconditionViolated("need c + log n > 0");
    if (samples < 100) throw InsufficientSamples("need at least 100 samples");
    const double v = (c + std::log(n)) / (2.0 * gamma);
    const double scale = std::sqrt(n);
    const Box Wn{W.lo * scale, W.hi * scale};
    const double area = Wn.volume();
    // e^{-4 gamma v} |W_n|^2 = e^{-2c} |W|^2 without overflow
    const double e4v = std::exp(-4.0 * gamma * v);
    const double g6 = std::pow(gamma, 6);
    const double pref_pair = 2.0 * g6 / 36.0;

    ETermResult out;
    out.term = term;
    out.n = n;
    out.c = c;

    if (term == ETerm::E2) {
        const MeanSe m = mc_mean(samples, seed, [&](Rng& rng) {
            const Tangent3 tu = draw_directions(rng);
            if (tu.delta == 0.0) return 0.0;
            const Tangent3 tg = draw_directions(rng);
            if (tg.delta == 0.0) return 0.0;
            const Vector z = uniform_in_box(rng, Wn), w = uniform_in_box(rng, Wn);
            const double r = v + rng.exponential(2.0 * gamma), s = v + rng.exponential(2.0 * gamma);
            bool hit = false;
            for (int i = 0; i < 3 && !hit; ++i) {
                hit = std::fabs(w.dot(tu.u[i]) - z.dot(tu.u[i]) - r) <= s ||
                      std::fabs(z.dot(tg.u[i]) - w.dot(tg.u[i]) - s) <= r;
            }
            if (!hit) return 0.0;
            return pref_pair * 256.0 * tu.delta * tg.delta * area * area * e4v / (4.0 * gamma * gamma);
        });
        out.estimate = m.mean;
        out.sigma = m.se;
        return out;
    }

    if (term == ETerm::E5) {
        const double T = (2.0 + delta_star(2).delta_star) * v;
        const double q = std::exp(-2.0 * gamma * (T - v));
        const double base = pref_pair * kTupleConstant2 * kTupleConstant2 * area * area * e4v / (4.0 * gamma * gamma);
        auto value = [&](Rng& rng, double r, double s) {
            const Vector z = uniform_in_box(rng, Wn), w = uniform_in_box(rng, Wn);
            if (r + s > (z - w).norm()) return 0.0;
            return base * std::expm1(gamma * pair_hit_measure_general(z, r, w, s));
        };
        const auto ms = mc_means(3, samples, seed, [&](Rng& rng, std::span<double> o) {
            double mass;
            // r above T, s unrestricted
            o[0] = q * value(rng, T + rng.exponential(2.0 * gamma), v + rng.exponential(2.0 * gamma));
            // r below T, s above T
            const double r1 = v + truncated_exponential(rng, 2.0 * gamma, T - v, mass);
            o[1] = (1.0 - q) * q * value(rng, r1, T + rng.exponential(2.0 * gamma));
            // both below T
            const double r2 = v + truncated_exponential(rng, 2.0 * gamma, T - v, mass);
            const double s2 = v + truncated_exponential(rng, 2.0 * gamma, T - v, mass);
            o[2] = (1.0 - q) * (1.0 - q) * value(rng, r2, s2);
        });
        out.split_high = ms[0].mean + ms[1].mean;
        out.split_high_sigma = std::hypot(ms[0].se, ms[1].se);
        out.split_low = ms[2].mean;
        out.split_low_sigma = ms[2].se;
        out.estimate = out.split_high + out.split_low;
        out.sigma = std::hypot(out.split_high_sigma, out.split_low_sigma);
        return out;
    }

    // E6: one representative index set per size, times the 3 sets of that size.
    const auto ms = mc_means(2, samples, seed, [&](Rng& rng, std::span<double> o) {
        const Tangent3 tu = draw_directions(rng);
        if (tu.delta == 0.0) return;
        const Vector z = uniform_in_box(rng, Wn);
        const double r = v + rng.exponential(2.0 * gamma);
        std::array<double, 3> t;
        for (int i = 0; i < 3; ++i) t[i] = z.dot(tu.u[i]) + r;
        const double base = 16.0 * tu.delta * area * e4v / (4.0 * gamma * gamma);
        auto pair_term = [&](const Vector& w, double s) {
            if (r + s > (z - w).norm()) return 0.0;
            return std::exp(gamma * pair_hit_measure_general(z, r, w, s));
        };
        {
            // |I| = 1: shared hyperplane H_1, z' on the parallel line at distance s
            const double sg = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double s = v + rng.exponential(2.0 * gamma);
            Matrix V(2, 3);
            V.col(0) = sg * tu.u[0];
            Vector e;
            rng.unit_vector(e, 2);
            V.col(1) = e;
            rng.unit_vector(e, 2);
            V.col(2) = e;
            if (positively_spanning<double>(V)) {
                std::array<Vector, 3> us{V.col(0), V.col(1), V.col(2)};
                const double dg = simplex_volume_delta<double>(std::span<const Vector>(us.data(), 3));
                Vector w;
                const double chord = chord_in_box(Wn, us[0], sg * t[0] - s, rng, w);
                if (chord > 0.0) o[0] = base * 16.0 * dg * chord * pair_term(w, s);
            }
        }
        {
            // |I| = 2: shared H_1, H_2, z' at the intersection of the shifted lines
            const double s1 = rng.uniform() < 0.5 ? -1.0 : 1.0, s2 = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double s = v + rng.exponential(2.0 * gamma);
            Matrix V(2, 3);
            V.col(0) = s1 * tu.u[0];
            V.col(1) = s2 * tu.u[1];
            Vector e;
            rng.unit_vector(e, 2);
            V.col(2) = e;
            if (positively_spanning<double>(V)) {
                std::array<Vector, 3> us{V.col(0), V.col(1), V.col(2)};
                const double dg = simplex_volume_delta<double>(std::span<const Vector>(us.data(), 3));
                const double nab = parallelepiped_volume_nabla<double>(std::span<const Vector>(us.data(), 2));
                Eigen::Matrix2d A;
                A << us[0][0], us[0][1], us[1][0], us[1][1];
                const Eigen::Vector2d rhs(s1 * t[0] - s, s2 * t[1] - s);
                const Vector w = Vector(A.partialPivLu().solve(rhs));
                if (nab > 0.0 && Wn.contains(w)) o[1] = base * 16.0 * dg / nab * pair_term(w, s);
            }
        }
    });
    const double pre = 2.0 * std::pow(gamma, 3) / 6.0;
    const double k1 = pre * 3.0 * gamma * gamma / 2.0, k2 = pre * 3.0 * gamma;
    out.estimate = k1 * ms[0].mean + k2 * ms[1].mean;
    out.sigma = std::hypot(k1 * ms[0].se, k2 * ms[1].se);
    return out;
}

}  // namespace hypermosaic
