#include "hypermosaic/geometry.hpp"

#include <algorithm>
#include <map>
#include <numbers>
#include <utility>

#include "hypermosaic/optimize.hpp"

namespace hypermosaic {

bool window_contains(const Window& w, const Vector& x) {
    return std::visit([&](const auto& v) { return v.contains(x); }, w);
}

double window_volume(const Window& w) {
    if (const auto* b = std::get_if<Ball>(&w)) return kappa(b->dim()) * std::pow(b->radius, b->dim());
    return std::get<Box>(w).volume();
}

Ball window_circumball(const Window& w) {
    if (const auto* b = std::get_if<Ball>(&w)) return *b;
    return std::get<Box>(w).circumball();
}

int window_dim(const Window& w) {
    return std::visit([](const auto& v) { return v.dim(); }, w);
}

double kappa(int d) { return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0); }

double omega(int d) { return d * kappa(d); }

SizeFunctional SizeFunctional::volume(int d) {
    return {SizeKind::volume, static_cast<double>(d), 2.0 * std::pow(kappa(d), -1.0 / d)};
}

SizeFunctional SizeFunctional::surface_area(int d) {
    return {SizeKind::surface_area, static_cast<double>(d - 1), 2.0 * std::pow(omega(d), -1.0 / (d - 1))};
}

namespace {

Halfspace edge_halfspace(const Vector& a, const Vector& b) {
    Vector n(2);
    n << b[1] - a[1], a[0] - b[0];
    n.normalize();
    return {n, n.dot(a)};
}

// order planar points counter-clockwise around their centroid
void sort_ccw(std::vector<Vector>& pts) {
    Vector c = Vector::Zero(2);
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    std::sort(pts.begin(), pts.end(), [&](const Vector& a, const Vector& b) {
        return std::atan2(a[1] - c[1], a[0] - c[0]) < std::atan2(b[1] - c[1], b[0] - c[0]);
    });
}

bool near_existing(const std::vector<Vector>& pts, const Vector& v, double tol) {
    for (const auto& p : pts)
        if ((p - v).norm() <= tol) return true;
    return false;
}

double hs_scale(const std::vector<Halfspace>& hs) {
    double s = 1.0;
    for (const auto& h : hs) s = std::max(s, std::fabs(h.r));
    return s;
}

Polytope enumerate_2d(const std::vector<Halfspace>& hs, double tol) {
    const double scale = hs_scale(hs);
    std::vector<Vector> verts;
    const std::size_t n = hs.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double det = hs[i].u[0] * hs[j].u[1] - hs[i].u[1] * hs[j].u[0];
            if (std::fabs(det) < 1e-14) continue;
            Vector v(2);
            v << (hs[i].r * hs[j].u[1] - hs[j].r * hs[i].u[1]) / det,
                (hs[i].u[0] * hs[j].r - hs[j].u[0] * hs[i].r) / det;
            bool feasible = true;
            for (const auto& h : hs)
                if (!h.contains(v, tol * scale)) {
                    feasible = false;
                    break;
                }
            if (feasible && !near_existing(verts, v, 10 * tol * scale)) verts.push_back(v);
        }
    }
    if (verts.size() < 3) throw DegeneratePolytope("fewer than 3 vertices");
    sort_ccw(verts);
    Polytope P;
    P.d = 2;
    P.vertices = verts;
    const std::size_t k = verts.size();
    for (std::size_t i = 0; i < k; ++i) {
        const Vector& a = verts[i];
        const Vector& b = verts[(i + 1) % k];
        std::size_t best = 0;
        double best_err = 1e300;
        for (std::size_t m = 0; m < n; ++m) {
            const double err = std::max(std::fabs(hs[m].slack(a)), std::fabs(hs[m].slack(b)));
            if (err < best_err) {
                best_err = err;
                best = m;
            }
        }
        P.halfspaces.push_back(hs[best]);
    }
    return P;
}

Polytope enumerate_3d(const std::vector<Halfspace>& hs, double tol) {
    const double scale = hs_scale(hs);
    std::vector<Vector> verts;
    const std::size_t n = hs.size();
    Eigen::Matrix3d M;
    Eigen::Vector3d rhs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                M.row(0) = hs[i].u.transpose();
                M.row(1) = hs[j].u.transpose();
                M.row(2) = hs[k].u.transpose();
                if (std::fabs(M.determinant()) < 1e-12) continue;
                rhs << hs[i].r, hs[j].r, hs[k].r;
                const Vector v = M.partialPivLu().solve(rhs);
                bool feasible = true;
                for (const auto& h : hs)
                    if (!h.contains(v, tol * scale)) {
                        feasible = false;
                        break;
                    }
                if (feasible && !near_existing(verts, v, 10 * tol * scale)) verts.push_back(v);
            }
    if (verts.size() < 4) throw DegeneratePolytope("fewer than 4 vertices");
    Polytope P;
    P.d = 3;
    P.vertices = verts;
    std::vector<std::vector<int>> seen;
    for (const auto& h : hs) {
        std::vector<int> on;
        for (int v = 0; v < static_cast<int>(verts.size()); ++v)
            if (std::fabs(h.slack(verts[v])) <= 100 * tol * scale) on.push_back(v);
        if (on.size() < 3) continue;
        if (std::find(seen.begin(), seen.end(), on) != seen.end()) continue;
        seen.push_back(on);
        Eigen::Vector3d fc = Eigen::Vector3d::Zero();
        for (int v : on) fc += verts[v];
        fc /= static_cast<double>(on.size());
        const Eigen::Vector3d u = h.u;
        const Eigen::Vector3d e1 = (Eigen::Vector3d(verts[on[0]]) - fc).normalized();
        const Eigen::Vector3d e2 = u.cross(e1);
        std::sort(on.begin(), on.end(), [&](int a, int b) {
            const Eigen::Vector3d pa = Eigen::Vector3d(verts[a]) - fc, pb = Eigen::Vector3d(verts[b]) - fc;
            return std::atan2(pa.dot(e2), pa.dot(e1)) < std::atan2(pb.dot(e2), pb.dot(e1));
        });
        P.halfspaces.push_back(h);
        P.faces.push_back(on);
    }
    if (P.faces.size() < 4) throw DegeneratePolytope("fewer than 4 facets");
    return P;
}

}  // namespace

Polytope Polytope::from_halfspaces(const std::vector<Halfspace>& hs, int d, double tol) {
    if (d == 2) return enumerate_2d(hs, tol);
    if (d == 3) return enumerate_3d(hs, tol);
    throw DimensionUnsupported("vertex enumeration needs d in {2,3}");
}

Polytope Polytope::from_vertices_2d(std::vector<Vector> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) { return (a - b).norm() < 1e-14; }),
              pts.end());
    auto cross = [](const Vector& o, const Vector& a, const Vector& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Vector> hull;
    if (pts.size() <= 2) {
        hull = pts;
    } else {
        std::vector<Vector> h(2 * pts.size());
        std::size_t k = 0;
        for (const auto& p : pts) {
            while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
            h[k++] = p;
        }
        for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
            while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
            h[k++] = pts[i];
        }
        h.resize(k - 1);
        hull = h;
    }
    Polytope P;
    P.d = 2;
    P.vertices = hull;
    if (hull.size() >= 2)
        for (std::size_t i = 0; i < hull.size(); ++i) P.halfspaces.push_back(edge_halfspace(hull[i], hull[(i + 1) % hull.size()]));
    return P;
}

Polytope Polytope::scaled(double lambda) const {
    Polytope P = *this;
    for (auto& v : P.vertices) v *= lambda;
    for (auto& h : P.halfspaces) h.r *= lambda;
    return P;
}

Polytope Polytope::transformed(const Matrix& Q, const Vector& t) const {
    Polytope P = *this;
    for (auto& v : P.vertices) v = Q * v + t;
    for (auto& h : P.halfspaces) {
        h.u = Q * h.u;
        h.r += h.u.dot(t);
    }
    return P;
}

Vector Polytope::vertex_centroid() const {
    Vector c = Vector::Zero(d);
    for (const auto& v : vertices) c += v;
    return c / static_cast<double>(vertices.size());
}

double Polytope::inradius_at(const Vector& z) const {
    double m = 1e300;
    for (const auto& h : halfspaces) m = std::min(m, h.slack(z));
    return m;
}

double Polytope::circumradius_at(const Vector& z) const {
    double m = 0.0;
    for (const auto& v : vertices) m = std::max(m, (v - z).norm());
    return m;
}

bool Polytope::contains(const Vector& x, double tol) const {
    for (const auto& h : halfspaces)
        if (!h.contains(x, tol)) return false;
    return true;
}

Polytope cell_polytope(std::span<const Hyperplane> tuple, std::span<const Hyperplane> others) {
    const auto ib = inball_nullspace<double>(tuple);
    if (!ib) throw NotGeneralPosition("tuple has no regular inball");
    return cell_polytope(tuple, others, *ib);
}

namespace {

struct Corner {
    double x, y;
    int label;  // halfspace of the edge leaving this corner
};

Polytope clip_cell_2d(std::span<const Hyperplane> tuple, std::span<const Hyperplane> others, const Inball& ib) {
    std::vector<Halfspace> hs;
    hs.reserve(3 + others.size());
    for (const auto& h : tuple) hs.push_back(halfspace_containing(h, ib.center));
    std::vector<Corner> poly;
    for (int i = 0; i < 3; ++i) {
        const int a = (i + 1) % 3, b = (i + 2) % 3;  // corner opposite facet i
        const double det = hs[a].u[0] * hs[b].u[1] - hs[a].u[1] * hs[b].u[0];
        poly.push_back({(hs[a].r * hs[b].u[1] - hs[b].r * hs[a].u[1]) / det,
                        (hs[a].u[0] * hs[b].r - hs[b].u[0] * hs[a].r) / det, -1});
    }
    const double zx = ib.center[0], zy = ib.center[1];
    std::sort(poly.begin(), poly.end(), [&](const Corner& p, const Corner& q) {
        return std::atan2(p.y - zy, p.x - zx) < std::atan2(q.y - zy, q.x - zx);
    });
    // the edge from corner k to k+1 lies on the facet shared by both corners,
    // i.e. the one that is neither of their opposite facets
    for (int k = 0; k < 3; ++k) {
        const Corner& p = poly[k];
        const Corner& q = poly[(k + 1) % 3];
        int best = 0;
        double best_err = 1e300;
        for (int f = 0; f < 3; ++f) {
            const double err = std::fabs(hs[f].u[0] * p.x + hs[f].u[1] * p.y - hs[f].r) +
                               std::fabs(hs[f].u[0] * q.x + hs[f].u[1] * q.y - hs[f].r);
            if (err < best_err) {
                best_err = err;
                best = f;
            }
        }
        poly[k].label = best;
    }
    std::vector<Corner> out;
    std::vector<double> s;
    for (const auto& h : others) {
        const Halfspace H = halfspace_containing(h, ib.center);
        s.resize(poly.size());
        double smax = -1e300;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            s[i] = H.u[0] * poly[i].x + H.u[1] * poly[i].y - H.r;
            smax = std::max(smax, s[i]);
        }
        if (smax <= 0.0) continue;
        const int label = static_cast<int>(hs.size());
        hs.push_back(H);
        out.clear();
        const std::size_t k = poly.size();
        for (std::size_t i = 0; i < k; ++i) {
            const Corner& a = poly[i];
            const Corner& b = poly[(i + 1) % k];
            const double sa = s[i], sb = s[(i + 1) % k];
            if (sa <= 0.0) out.push_back(a);
            if ((sa <= 0.0) != (sb <= 0.0)) {
                const double t = sa / (sa - sb);
                const Corner p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), sa <= 0.0 ? label : a.label};
                out.push_back(p);
            }
        }
        poly.swap(out);
        if (poly.size() < 3) throw DegeneratePolytope("cell collapsed during clipping");
    }
    Polytope P;
    P.d = 2;
    for (const auto& c : poly) {
        Vector v(2);
        v << c.x, c.y;
        P.vertices.push_back(v);
        P.halfspaces.push_back(hs[c.label]);
    }
    return P;
}

}  // namespace

Polytope cell_polytope(std::span<const Hyperplane> tuple, std::span<const Hyperplane> others, const Inball& ib) {
    const int d = tuple[0].dim();
    if (d != 2 && d != 3) throw DimensionUnsupported("cell polytopes need d in {2,3}");
    const double slack = 1e-12 * (1.0 + ib.radius);
    for (const auto& h : others)
        if (h.distance(ib.center) < ib.radius - slack) throw InballHit("a hyperplane meets the open inball");
    if (d == 2) return clip_cell_2d(tuple, others, ib);

    std::vector<Halfspace> hs;
    for (const auto& h : tuple) hs.push_back(halfspace_containing(h, ib.center));
    std::vector<Vector> corners;
    Eigen::Matrix3d M;
    Eigen::Vector3d rhs;
    for (int skip = 0; skip < 4; ++skip) {
        for (int i = 0, row = 0; i < 4; ++i) {
            if (i == skip) continue;
            M.row(row) = hs[i].u.transpose();
            rhs[row++] = hs[i].r;
        }
        corners.push_back(M.partialPivLu().solve(rhs));
    }
    for (const auto& h : others) {
        const Halfspace H = halfspace_containing(h, ib.center);
        for (const auto& c : corners)
            if (!H.contains(c)) {
                hs.push_back(H);
                break;
            }
    }
    return Polytope::from_halfspaces(hs, 3);
}

double polytope_volume(const Polytope& P) {
    if (P.d == 2) {
        const std::size_t k = P.vertices.size();
        const Vector c = P.vertex_centroid();
        double a = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const Vector p = P.vertices[i] - c, q = P.vertices[(i + 1) % k] - c;
            a += p[0] * q[1] - p[1] * q[0];
        }
        return 0.5 * std::fabs(a);
    }
    if (P.d == 3) {
        const Vector c = P.vertex_centroid();
        double vol = 0.0;
        for (std::size_t f = 0; f < P.faces.size(); ++f) {
            const auto& face = P.faces[f];
            Eigen::Vector3d area = Eigen::Vector3d::Zero();
            const Eigen::Vector3d v0 = P.vertices[face[0]];
            for (std::size_t i = 1; i + 1 < face.size(); ++i)
                area += (Eigen::Vector3d(P.vertices[face[i]]) - v0).cross(Eigen::Vector3d(P.vertices[face[i + 1]]) - v0);
            vol += 0.5 * area.norm() * P.halfspaces[f].slack(c) / 3.0;
        }
        return vol;
    }
    throw DimensionUnsupported("volume needs d in {2,3}");
}

double polytope_surface(const Polytope& P) {
    if (P.d == 2) {
        const std::size_t k = P.vertices.size();
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += (P.vertices[(i + 1) % k] - P.vertices[i]).norm();
        return s;
    }
    if (P.d == 3) {
        double s = 0.0;
        for (const auto& face : P.faces) {
            Eigen::Vector3d area = Eigen::Vector3d::Zero();
            const Eigen::Vector3d v0 = P.vertices[face[0]];
            for (std::size_t i = 1; i + 1 < face.size(); ++i)
                area += (Eigen::Vector3d(P.vertices[face[i]]) - v0).cross(Eigen::Vector3d(P.vertices[face[i + 1]]) - v0);
            s += 0.5 * area.norm();
        }
        return s;
    }
    throw DimensionUnsupported("surface area needs d in {2,3}");
}

double polytope_size(const Polytope& P, const SizeFunctional& sigma) {
    if (P.d != 2 && P.d != 3) throw DimensionUnsupported("size functionals need d in {2,3}");
    if (static_cast<int>(P.vertices.size()) < P.d + 1) throw DegeneratePolytope("too few vertices");
    const double vol = polytope_volume(P);
    if (!(vol > 0.0)) throw DegeneratePolytope("zero volume");
    return sigma.kind == SizeKind::volume ? vol : polytope_surface(P);
}

double phi_mean_width(const Ball& K) { return 2.0 * K.radius; }

double phi_mean_width(const Polytope& K) {
    if (K.d == 2) {
        const Polytope hull = Polytope::from_vertices_2d(K.vertices);
        const std::size_t k = hull.vertices.size();
        if (k < 2) return 0.0;
        // vertex i supports the arc between the normals of edges i-1 and i
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const Vector& nin = hull.halfspaces[(i + k - 1) % k].u;
            const Vector& nout = hull.halfspaces[i].u;
            const double a = std::atan2(nin[1], nin[0]);
            double b = std::atan2(nout[1], nout[0]);
            while (b < a) b += 2.0 * std::numbers::pi;
            const Vector& v = hull.vertices[i];
            total += v[0] * (std::sin(b) - std::sin(a)) - v[1] * (std::cos(b) - std::cos(a));
        }
        return total / std::numbers::pi;
    }
    if (K.d == 3) {
        std::map<std::pair<int, int>, std::vector<int>> edges;
        for (std::size_t f = 0; f < K.faces.size(); ++f) {
            const auto& face = K.faces[f];
            for (std::size_t i = 0; i < face.size(); ++i) {
                int a = face[i], b = face[(i + 1) % face.size()];
                if (a > b) std::swap(a, b);
                edges[{a, b}].push_back(static_cast<int>(f));
            }
        }
        double total = 0.0;
        for (const auto& [e, fs] : edges) {
            if (fs.size() != 2) throw DegeneratePolytope("edge not shared by two facets");
            const double c = std::clamp(K.halfspaces[fs[0]].u.dot(K.halfspaces[fs[1]].u), -1.0, 1.0);
            total += (K.vertices[e.first] - K.vertices[e.second]).norm() * std::acos(c);
        }
        return total / (4.0 * std::numbers::pi);
    }
    throw DimensionUnsupported("mean width of polytopes needs d in {2,3}");
}

double deviation_theta(const Polytope& P) {
    if (static_cast<int>(P.vertices.size()) < P.d + 1 || P.halfspaces.size() < static_cast<std::size_t>(P.d + 1))
        throw DegeneratePolytope("too few vertices or facets");
    const Vector centroid = P.vertex_centroid();
    const double scale = P.circumradius_at(centroid);
    if (!(scale > 0.0)) throw DegeneratePolytope("zero extent");
    auto objective = [&](const Vector& z) {
        const double rho = P.inradius_at(z);
        if (rho <= 0.0) return 1.0 - rho / scale;
        const double R = P.circumradius_at(z);
        return (R - rho) / (R + rho);
    };
    const auto cheb = nelder_mead([&](const Vector& z) { return -P.inradius_at(z); }, centroid, 0.25 * scale, 1e-14 * scale,
                                  1e-12 * scale);
    MinimizeResult best{centroid, objective(centroid), 0};
    double step = 0.1 * scale;
    const Vector seeds[] = {cheb.x, centroid};
    for (const auto& s : seeds) {
        const auto r = nelder_mead(objective, s, step, 1e-15, 1e-13 * scale);
        if (r.value < best.value) best = r;
    }
    for (int k = 0; k < 3; ++k) {
        step *= 0.3;
        const auto r = nelder_mead(objective, best.x, step, 1e-15, 1e-13 * scale);
        if (r.value < best.value) best = r;
    }
    return best.value;
}

}  // namespace hypermosaic
