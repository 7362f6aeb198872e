#include "hypermosaic/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "hypermosaic/montecarlo.hpp"
#include "hypermosaic/parallel.hpp"

namespace hypermosaic {

namespace {

bool window_inside(const Window& window, const Ball& region) {
    if (const auto* b = std::get_if<Ball>(&window)) return region.contains(*b, 1e-12 * (1.0 + region.radius));
    const auto& box = std::get<Box>(window);
    const int d = box.dim();
    // farthest corner from the region centre
    Vector far(d);
    for (int i = 0; i < d; ++i)
        far[i] = std::fabs(box.lo[i] - region.center[i]) > std::fabs(box.hi[i] - region.center[i]) ? box.lo[i]
                                                                                                    : box.hi[i];
    return region.contains(far, 1e-12 * (1.0 + region.radius));
}

bool inball_empty(const std::vector<Hyperplane>& hs, const Vector& z, double r, std::span<const int> tuple,
                  std::size_t from = 0) {
    const double cut = r - kEmptyTol * (1.0 + r);
    for (std::size_t k = from; k < hs.size(); ++k) {
        if (std::fabs(hs[k].signed_distance(z)) < cut &&
            std::find(tuple.begin(), tuple.end(), static_cast<int>(k)) == tuple.end())
            return false;
    }
    return true;
}

// d = 2 fast path: inball of three lines from the cofactor null vector
void extract_2d(const std::vector<Hyperplane>& hs, const Window& window, double min_r, std::vector<CellRecord>& out) {
    const int n = static_cast<int>(hs.size());
    std::vector<double> cross(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cross[i * n + j] = hs[i].u[0] * hs[j].u[1] - hs[i].u[1] * hs[j].u[0];
    Vector z(2);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = b + 1; c < n; ++c) {
                const double l0 = cross[b * n + c], l1 = cross[c * n + a], l2 = cross[a * n + b];
                const double a0 = std::fabs(l0), a1 = std::fabs(l1), a2 = std::fabs(l2);
                const double big = std::max({a0, a1, a2});
                if (!(std::min({a0, a1, a2}) >= big / kMaxCondition)) continue;
                const double dot = l0 * hs[a].r + l1 * hs[b].r + l2 * hs[c].r;
                const double r = std::fabs(dot) / (a0 + a1 + a2);
                if (r < min_r || !(r > 0.0)) continue;
                const double flip = dot >= 0 ? 1.0 : -1.0;
                // eps_k = flip * sign(lambda_k); solve on the two lines off the largest cofactor
                const int idx[3] = {a, b, c};
                const double lam[3] = {l0, l1, l2};
                const int piv = a0 == big ? 0 : (a1 == big ? 1 : 2);
                const int i = idx[(piv + 1) % 3], j = idx[(piv + 2) % 3];
                const double ei = flip * (lam[(piv + 1) % 3] > 0 ? 1.0 : -1.0);
                const double ej = flip * (lam[(piv + 2) % 3] > 0 ? 1.0 : -1.0);
                const double bi = hs[i].r - ei * r, bj = hs[j].r - ej * r;
                const double det = cross[i * n + j];
                z[0] = (bi * hs[j].u[1] - bj * hs[i].u[1]) / det;
                z[1] = (hs[i].u[0] * bj - hs[j].u[0] * bi) / det;
                if (!window_contains(window, z)) continue;
                const int tup[3] = {a, b, c};
                if (!inball_empty(hs, z, r, tup)) continue;
                CellRecord rec;
                rec.tuple = {a, b, c};
                rec.center = z;
                rec.inradius = r;
                out.push_back(std::move(rec));
            }
}

void extract_general(const std::vector<Hyperplane>& hs, int d, const Window& window, double min_r,
                     std::vector<CellRecord>& out) {
    const int n = static_cast<int>(hs.size());
    const int m = d + 1;
    if (n < m) return;
    std::vector<int> idx(m);
    for (int k = 0; k < m; ++k) idx[k] = k;
    std::array<Hyperplane, kMaxDim + 1> tuple;
    for (;;) {
        for (int k = 0; k < m; ++k) tuple[k] = hs[idx[k]];
        const auto ib = inball_nullspace<double>(std::span<const Hyperplane>(tuple.data(), m));
        if (ib && ib->radius >= min_r && window_contains(window, ib->center) &&
            inball_empty(hs, ib->center, ib->radius, idx)) {
            CellRecord rec;
            rec.tuple = idx;
            rec.center = ib->center;
            rec.inradius = ib->radius;
            out.push_back(std::move(rec));
        }
        int k = m - 1;
        while (k >= 0 && idx[k] == n - m + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

std::vector<CellRecord> extract_cells(const Realization& w, const Window& window, double min_inradius) {
    if (window_dim(window) != w.params.d) throw PreconditionViolated("window dimension differs from the process");
    if (!window_inside(window, w.region)) throw WindowNotContained("observation window is not inside the region");
    if (min_inradius < 0) throw PreconditionViolated("min_inradius must be non-negative");
    std::vector<CellRecord> out;
    if (w.params.d == 2)
        extract_2d(w.hyperplanes, window, min_inradius, out);
    else
        extract_general(w.hyperplanes, w.params.d, window, min_inradius, out);
    return out;
}

void attach_body(CellRecord& rec, const Realization& w) {
    const int m = static_cast<int>(rec.tuple.size());
    std::array<Hyperplane, kMaxDim + 1> tuple;
    for (int k = 0; k < m; ++k) tuple[k] = w.hyperplanes[rec.tuple[k]];
    std::vector<Hyperplane> others;
    others.reserve(w.size());
    for (std::size_t k = 0; k < w.size(); ++k)
        if (std::find(rec.tuple.begin(), rec.tuple.end(), static_cast<int>(k)) == rec.tuple.end())
            others.push_back(w.hyperplanes[k]);
    // the tuple signs are recomputed inside from the stored inball
    const auto ib = inball_nullspace<double>(std::span<const Hyperplane>(tuple.data(), m));
    if (!ib) throw NotGeneralPosition("stored tuple became degenerate");
    rec.body = cell_polytope(std::span<const Hyperplane>(tuple.data(), m), others, *ib);
    rec.volume = polytope_volume(*rec.body);
    rec.surface = polytope_surface(*rec.body);
}

CellRecord certify_cell(CellRecord rec, const Realization& w, const ConeSystem& cones) {
    const auto st = stopping_radius(rec.inball(), w.hyperplanes, cones);
    rec.stopping_radius = st.R;
    rec.certified = std::isfinite(st.R) && w.region.contains(Ball{rec.center, st.R});
    return rec;
}

double guard_radius(double gamma, int d, double window_volume, double miss) {
    const double load = std::pow(gamma, d) * window_volume / miss;
    return std::max(std::log(std::max(load, 1.0)), 1.0) / (2.0 * gamma);
}

namespace {

// region radius needed to certify rec; infinity when more hyperplanes are needed
double required_radius(const CellRecord& rec, const Realization& w, Certification rule, const ConeSystem& cones) {
    const double off = (rec.center - w.region.center).norm();
    switch (rule) {
        case Certification::inball:
            return off + rec.inradius;
        case Certification::hull:
            return rec.body->circumradius_at(w.region.center);
        case Certification::stopping_radius: {
            const double R = stopping_radius(rec.inball(), w.hyperplanes, cones).R;
            return std::isfinite(R) ? off + R : kInf;
        }
    }
    return kInf;
}

}  // namespace

WindowCells window_cells(const ProcessParams& p, const Window& window, const WindowOptions& opt, Rng& rng,
                         Realization* keep_realization) {
    const Ball wb = window_circumball(window);
    const double guard = opt.guard >= 0 ? opt.guard : guard_radius(p.gamma, p.d, window_volume(window));
    const double cap = opt.max_region_radius > 0 ? opt.max_region_radius : 50.0 * wb.radius + 500.0 / p.gamma;
    Realization w = sample(p, {wb.center, wb.radius + guard}, rng);
    const bool need_body = opt.with_body || opt.rule == Certification::hull;
    ConeSystem cones;
    if (opt.rule == Certification::stopping_radius) cones = build_cone_system(p.d, opt.alpha);

    WindowCells out;
    std::vector<CellRecord> cells = extract_cells(w, window, opt.min_inradius);
    std::vector<double> need(cells.size());
    auto refresh = [&](std::size_t from_line) {
        // re-test emptiness against new hyperplanes, redo bodies, apply the size floor
        std::vector<CellRecord> kept;
        for (auto& c : cells) {
            if (c.certified) {
                kept.push_back(std::move(c));
                continue;
            }
            if (from_line > 0 && !inball_empty(w.hyperplanes, c.center, c.inradius, c.tuple, from_line)) continue;
            if (need_body) {
                attach_body(c, w);
                if (opt.size_floor >= 0 && c.size(opt.sigma) <= opt.size_floor) continue;
            }
            const double req = required_radius(c, w, opt.rule, cones);
            c.certified = req < w.region.radius;
            if (opt.rule == Certification::stopping_radius)
                c.stopping_radius = stopping_radius(c.inball(), w.hyperplanes, cones).R;
            kept.push_back(std::move(c));
        }
        cells = std::move(kept);
    };
    refresh(0);
    for (const auto& c : cells) out.first_pass_certified += c.certified;
    while (w.region.radius < cap) {
        double target = 0.0;
        bool pending = false;
        for (const auto& c : cells) {
            if (c.certified) continue;
            pending = true;
            const double req = required_radius(c, w, opt.rule, cones);
            target = std::max(target, std::isfinite(req) ? req * 1.02 : 2.0 * w.region.radius);
        }
        if (!pending) break;
        target = std::min(std::max(target, w.region.radius + 1.0 / p.gamma), cap);
        const std::size_t before = w.size();
        extend(w, target, rng);
        refresh(before);
    }
    out.final_region_radius = w.region.radius;
    out.cells = std::move(cells);
    if (keep_realization) *keep_realization = std::move(w);
    return out;
}

EmpiricalDistribution EmpiricalDistribution::from(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return {std::move(xs)};
}

double EmpiricalDistribution::cdf(double x) const {
    const auto it = std::upper_bound(values.begin(), values.end(), x);
    return static_cast<double>(it - values.begin()) / static_cast<double>(values.size());
}

double EmpiricalDistribution::survival(double x) const { return 1.0 - cdf(x); }

void EmpiricalDistribution::write_csv(std::ostream& os) const {
    os << "value\r\n" << std::setprecision(17);
    for (double v : values) os << v << "\r\n";
}

EmpiricalDistribution EmpiricalDistribution::read_csv(std::istream& is) {
    std::string line;
    std::getline(is, line);
    std::vector<double> xs;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) xs.push_back(std::stod(line));
    }
    return from(std::move(xs));
}

GTransform::GTransform(const EmpiricalDistribution& F) : F_(&F) {
    if (F.n() < 1) throw PreconditionViolated("empirical distribution is empty");
}

double GTransform::operator()(double x) const {
    const double n = static_cast<double>(F_->n());
    const double F = std::min(F_->cdf(x), 1.0 - 1.0 / (n + 1.0));
    return 1.0 / (1.0 - F);
}

double GTransform::max_value() const { return static_cast<double>(F_->n()) + 1.0; }

double GTransform::inverse(double y) const {
    const std::size_t n = F_->n();
    if (n < 100) throw PreconditionViolated("G inverse needs at least 100 sample values");
    if (y > max_value() * (1.0 + 1e-12)) throw OutOfRange("G inverse queried beyond the resolvable quantile");
    if (y <= 1.0) return F_->values.front();
    // smallest k with k/n >= 1 - 1/y (k = n at the clamp)
    const double m = static_cast<double>(n) * (1.0 - 1.0 / y);
    auto k = static_cast<std::size_t>(std::ceil(m - 1e-9 * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    return F_->values[k - 1];
}

TypicalCellSample sample_typical_cells(const ProcessParams& params, std::size_t target_count,
                                       const TypicalCellOptions& opt) {
    params.validate();
    if (target_count < 1) throw PreconditionViolated("target_count must be at least 1");
    const int d = params.d;
    const double side = opt.window_side / params.gamma;
    const Box window{Vector::Constant(d, -side / 2), Vector::Constant(d, side / 2)};
    WindowOptions wo;
    wo.rule = opt.rule;
    wo.with_body = opt.with_body;
    wo.alpha = opt.alpha;
    wo.sigma = opt.sigma;

    TypicalCellSample out;
    std::size_t seen = 0, first_pass = 0;
    const std::size_t batch = 16;
    std::size_t next = 0;
    std::vector<double> sizes;
    while (out.cells.size() < target_count) {
        std::vector<WindowCells> res(batch);
        parallel_for(batch, [&](std::size_t b) {
            Rng rng(params.seed, next + b);
            res[b] = window_cells(params, window, wo, rng);
        });
        next += batch;
        for (auto& r : res) {
            if (out.cells.size() >= target_count) break;
            ++out.realizations;
            out.cells_per_volume.push_back(static_cast<double>(r.cells.size()) / window.volume());
            seen += r.cells.size();
            first_pass += r.first_pass_certified;
            for (auto& c : r.cells) {
                if (!c.certified) {
                    ++out.uncertified;
                    continue;
                }
                if (opt.with_body) sizes.push_back(c.size(opt.sigma));
                out.cells.push_back(std::move(c));
            }
        }
        if (seen > 200 && out.cells.size() < seen / 2)
            throw CertificationStarvation("fewer than half of the window cells could be certified");
    }
    out.first_pass_certified_fraction = seen ? static_cast<double>(first_pass) / static_cast<double>(seen) : 1.0;
    if (opt.with_body) out.sizes = EmpiricalDistribution::from(std::move(sizes));
    return out;
}

GammaDEstimate gamma_d_estimate(int d, double gamma, std::size_t mc_samples, std::uint64_t seed) {
    if (d < 2 || d > kMaxDim) throw PreconditionViolated("dimension must be in [2, 8]");
    if (mc_samples < 2) throw InsufficientSamples("need at least two samples");
    const auto m = mc_means(2, mc_samples, seed, [d](Rng& rng, std::span<double> out) {
        Matrix V(d, d + 1);
        std::array<Vector, kMaxDim + 1> pts;
        for (int k = 0; k <= d; ++k) {
            rng.unit_vector(pts[k], d);
            V.col(k) = pts[k];
        }
        if (!positively_spanning<double>(V)) return;
        out[0] = simplex_volume_delta<double>(std::span<const Vector>(pts.data(), d + 1));
        out[1] = 1.0;
    });
    const double pref = std::pow(2.0 * gamma, d) / (d + 1);
    return {pref * m[0].mean, pref * m[0].se, m[1].mean, m[1].se};
}

namespace {

std::vector<Vector> clip_polygon(const std::vector<Vector>& poly, const Halfspace& h) {
    std::vector<Vector> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vector& a = poly[i];
        const Vector& b = poly[(i + 1) % n];
        const double sa = h.slack(a), sb = h.slack(b);
        if (sa >= 0) out.push_back(a);
        if ((sa >= 0) != (sb >= 0)) out.push_back(a + (b - a) * (sa / (sa - sb)));
    }
    return out;
}

}  // namespace

Polytope zero_cell(const ProcessParams& p, Rng& rng, double initial_radius) {
    p.validate();
    if (p.d != 2) throw DimensionUnsupported("zero cell sampler is implemented for d = 2");
    const double r0 = initial_radius > 0 ? initial_radius : 4.0 / p.gamma;
    const Vector origin = Vector::Zero(2);
    Realization w = sample(p, {origin, r0}, rng);
    for (;;) {
        const double R = w.region.radius;
        std::vector<Vector> poly;
        for (int k = 0; k < 4; ++k) {
            Vector v(2);
            v << (k == 1 || k == 2 ? 2 * R : -2 * R), (k >= 2 ? 2 * R : -2 * R);
            poly.push_back(v);
        }
        for (const auto& h : w.hyperplanes) {
            poly = clip_polygon(poly, halfspace_containing<double>(h, origin));
            if (poly.size() < 3) throw DegeneratePolytope("zero cell clipped away");
        }
        double far = 0.0;
        for (const auto& v : poly) far = std::max(far, v.norm());
        if (far < R) return Polytope::from_vertices_2d(poly);
        extend(w, std::max(1.05 * far, R + 1.0 / p.gamma), rng);
    }
}

void write_cells_csv(const std::vector<CellRecord>& cells, int d, std::ostream& os) {
    for (int i = 0; i < d; ++i) os << "z_" << i + 1 << ',';
    os << "r,volume,surface,certified\r\n" << std::setprecision(17);
    for (const auto& c : cells) {
        for (int i = 0; i < d; ++i) os << c.center[i] << ',';
        os << c.inradius << ',';
        if (std::isfinite(c.volume)) os << c.volume;
        os << ',';
        if (std::isfinite(c.surface)) os << c.surface;
        os << ',' << (c.certified ? "true" : "false") << "\r\n";
    }
}

}  // namespace hypermosaic
