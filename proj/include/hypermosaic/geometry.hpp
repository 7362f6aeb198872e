#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hypermosaic/errors.hpp"

namespace hypermosaic {

inline constexpr int kMaxDim = 8;

template <class Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim + 1, kMaxDim + 1>;

using Vector = VectorT<double>;
using Matrix = MatrixT<double>;

// H(u, r) = {x : <x, u> = r}
template <class Scalar>
struct HyperplaneT {
    VectorT<Scalar> u;
    Scalar r{};

    int dim() const { return static_cast<int>(u.size()); }
    Scalar signed_distance(const VectorT<Scalar>& x) const { return x.dot(u) - r; }
    Scalar distance(const VectorT<Scalar>& x) const { using std::abs; return abs(signed_distance(x)); }
};

template <class Scalar>
struct BallT {
    VectorT<Scalar> center;
    Scalar radius{};

    int dim() const { return static_cast<int>(center.size()); }
    bool contains(const VectorT<Scalar>& x, Scalar tol = Scalar(0)) const {
        return (x - center).norm() <= radius + tol;
    }
    bool contains(const BallT& b, Scalar tol = Scalar(0)) const {
        return (b.center - center).norm() + b.radius <= radius + tol;
    }
};

// {x : <x, u> <= r}
template <class Scalar>
struct HalfspaceT {
    VectorT<Scalar> u;
    Scalar r{};

    bool contains(const VectorT<Scalar>& x, Scalar tol = Scalar(0)) const { return x.dot(u) - r <= tol; }
    Scalar slack(const VectorT<Scalar>& x) const { return r - x.dot(u); }
};

using Hyperplane = HyperplaneT<double>;
using Ball = BallT<double>;
using Halfspace = HalfspaceT<double>;

template <class Scalar>
bool hits(const HyperplaneT<Scalar>& h, const BallT<Scalar>& b) {
    return h.distance(b.center) <= b.radius;
}

// Closed halfspace bounded by h that contains z (outward normal points away from z).
template <class Scalar>
HalfspaceT<Scalar> halfspace_containing(const HyperplaneT<Scalar>& h, const VectorT<Scalar>& z) {
    return h.signed_distance(z) <= Scalar(0) ? HalfspaceT<Scalar>{h.u, h.r} : HalfspaceT<Scalar>{-h.u, -h.r};
}

struct Box {
    Vector lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vector& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }
    double volume() const { return (hi - lo).prod(); }
    Ball circumball() const { return {(lo + hi) / 2, (hi - lo).norm() / 2}; }
};

using Window = std::variant<Ball, Box>;

bool window_contains(const Window& w, const Vector& x);
double window_volume(const Window& w);
Ball window_circumball(const Window& w);
int window_dim(const Window& w);

// volume of the unit ball and surface area of the unit sphere in R^d
double kappa(int d);
double omega(int d);

enum class SizeKind { volume, surface_area };

struct SizeFunctional {
    SizeKind kind = SizeKind::volume;
    double k = 2.0;    // degree of homogeneity
    double tau = 0.0;  // constant of Phi(K) >= tau * Sigma(K)^{1/k}

    static SizeFunctional volume(int d);
    static SizeFunctional surface_area(int d);
    const char* name() const { return kind == SizeKind::volume ? "volume" : "surface_area"; }
};

// nabla_l: l-volume of the parallelepiped spanned by the vectors (Gram determinant).
template <class Scalar>
Scalar parallelepiped_volume_nabla(std::span<const VectorT<Scalar>> vs) {
    const int l = static_cast<int>(vs.size());
    if (l == 0) return Scalar(1);
    MatrixT<Scalar> gram(l, l);
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j) gram(i, j) = vs[i].dot(vs[j]);
    using std::sqrt;
    const Scalar det = gram.determinant();
    return det > Scalar(0) ? sqrt(det) : Scalar(0);
}

// Delta_l: l-volume of the convex hull of l+1 points.
template <class Scalar>
Scalar simplex_volume_delta(std::span<const VectorT<Scalar>> pts) {
    const int l = static_cast<int>(pts.size()) - 1;
    if (l <= 0) return Scalar(0);
    std::array<VectorT<Scalar>, kMaxDim + 1> diffs;
    Scalar fact(1);
    for (int i = 0; i < l; ++i) {
        diffs[i] = pts[i] - pts[l];
        fact *= Scalar(i + 1);
    }
    return parallelepiped_volume_nabla<Scalar>(std::span<const VectorT<Scalar>>(diffs.data(), l)) / fact;
}

// True when the d+1 columns of V (d x (d+1)) lie in no closed hemisphere,
// i.e. the origin is interior to their convex hull.
template <class Scalar>
bool positively_spanning(const MatrixT<Scalar>& V, Scalar tol = Scalar(1e-10)) {
    const int d = static_cast<int>(V.rows());
    if (V.cols() != d + 1) throw PreconditionViolated("positively_spanning expects d+1 vectors");
    // unique (up to scale) linear dependency, by cofactors
    VectorT<Scalar> lambda(d + 1);
    MatrixT<Scalar> minor(d, d);
    for (int k = 0; k <= d; ++k) {
        for (int c = 0, cc = 0; c <= d; ++c) {
            if (c == k) continue;
            minor.col(cc++) = V.col(c);
        }
        lambda[k] = ((k % 2) ? Scalar(-1) : Scalar(1)) * minor.determinant();
    }
    const Scalar scale = lambda.cwiseAbs().maxCoeff();
    if (!(scale > Scalar(0))) return false;
    const Scalar cut = tol * scale;
    bool pos = true, neg = true;
    for (int k = 0; k <= d; ++k) {
        pos = pos && lambda[k] > cut;
        neg = neg && lambda[k] < -cut;
    }
    return pos || neg;
}

template <class Scalar>
struct InballT {
    VectorT<Scalar> center;
    Scalar radius{};
    // signs[i] = +1 when u_i already points away from the centre
    std::array<int, kMaxDim + 1> signs{};
};

using Inball = InballT<double>;

inline constexpr double kMaxCondition = 1e12;
inline constexpr double kParallelTol = 1e-10;

namespace detail {
template <class Scalar>
void check_tuple(std::span<const HyperplaneT<Scalar>> tuple) {
    if (tuple.empty()) throw PreconditionViolated("empty tuple");
    const int d = tuple[0].dim();
    if (d < 1 || d > kMaxDim || static_cast<int>(tuple.size()) != d + 1)
        throw PreconditionViolated("tuple must hold d+1 hyperplanes of dimension d <= 8");
    for (const auto& h : tuple)
        if (h.dim() != d) throw PreconditionViolated("inconsistent dimensions in tuple");
    using std::abs;
    for (int i = 0; i <= d; ++i)
        for (int j = i + 1; j <= d; ++j)
            if (Scalar(1) - abs(tuple[i].u.dot(tuple[j].u)) < Scalar(kParallelTol))
                throw NotGeneralPosition("two normals are parallel");
}
}  // namespace detail

// Inball of the simplex bounded by d+1 hyperplanes. Enumerates the sign
// patterns eps and solves <eps_i u_i, z> + r = eps_i r_i for each.
template <class Scalar>
InballT<Scalar> simplex_inball(std::span<const HyperplaneT<Scalar>> tuple) {
    detail::check_tuple(tuple);
    const int d = tuple[0].dim();
    const int m = d + 1;
    MatrixT<Scalar> M(m, m), V(d, m);
    VectorT<Scalar> rhs(m);
    bool any_regular = false;
    std::optional<InballT<Scalar>> best;
    Scalar best_residual{};
    for (unsigned pattern = 0; pattern < (1u << m); ++pattern) {
        for (int i = 0; i < m; ++i) {
            const Scalar eps = (pattern >> i) & 1u ? Scalar(-1) : Scalar(1);
            M.row(i).head(d) = eps * tuple[i].u.transpose();
            M(i, d) = Scalar(1);
            rhs[i] = eps * tuple[i].r;
            V.col(i) = eps * tuple[i].u;
        }
        Eigen::PartialPivLU<MatrixT<Scalar>> lu(M);
        if (!(lu.rcond() * Scalar(kMaxCondition) >= Scalar(1))) continue;
        any_regular = true;
        const VectorT<Scalar> sol = lu.solve(rhs);
        const Scalar r = sol[d];
        if (!(r > Scalar(0))) continue;
        if (!positively_spanning<Scalar>(V)) continue;
        InballT<Scalar> ib;
        ib.center = sol.head(d);
        ib.radius = r;
        Scalar residual(0);
        using std::abs;
        using std::max;
        for (int i = 0; i < m; ++i) {
            ib.signs[i] = (pattern >> i) & 1u ? -1 : 1;
            residual = max(residual, abs(abs(tuple[i].signed_distance(ib.center)) - r));
        }
        if (!best || residual < best_residual) {
            best = ib;
            best_residual = residual;
        }
    }
    if (!any_regular) throw NotGeneralPosition("singular system for every sign pattern");
    if (!best) throw Unbounded("no sign pattern gives a positively spanning inball");
    return *best;
}

// Same inball through the left null vector lambda of the normal matrix:
// the admissible signs are eps_i = sign(lambda . r) sign(lambda_i) and
// r = |lambda . r| / sum |lambda_i|. Returns nullopt for degenerate tuples.
template <class Scalar>
std::optional<InballT<Scalar>> inball_nullspace(std::span<const HyperplaneT<Scalar>> tuple) {
    const int d = tuple[0].dim();
    const int m = d + 1;
    using std::abs;
    VectorT<Scalar> lambda(m);
    MatrixT<Scalar> minor(d, d);
    for (int k = 0; k < m; ++k) {
        for (int i = 0, ii = 0; i < m; ++i) {
            if (i == k) continue;
            minor.row(ii++) = tuple[i].u.transpose();
        }
        lambda[k] = ((k % 2) ? Scalar(-1) : Scalar(1)) * minor.determinant();
    }
    const Scalar total = lambda.cwiseAbs().sum();
    int pivot = 0;
    const Scalar biggest = lambda.cwiseAbs().maxCoeff(&pivot);
    if (!(biggest > Scalar(0)) || lambda.cwiseAbs().minCoeff() < Scalar(1) / Scalar(kMaxCondition) * biggest)
        return std::nullopt;
    Scalar dot(0);
    for (int k = 0; k < m; ++k) dot += lambda[k] * tuple[k].r;
    InballT<Scalar> ib;
    ib.radius = abs(dot) / total;
    if (!(ib.radius > Scalar(0))) return std::nullopt;
    const int flip = dot >= Scalar(0) ? 1 : -1;
    VectorT<Scalar> rhs(d);
    for (int i = 0, ii = 0; i < m; ++i) {
        ib.signs[i] = flip * (lambda[i] > Scalar(0) ? 1 : -1);
        if (i == pivot) continue;
        minor.row(ii) = tuple[i].u.transpose();
        rhs[ii++] = tuple[i].r - Scalar(ib.signs[i]) * ib.radius;
    }
    ib.center = minor.partialPivLu().solve(rhs);
    return ib;
}

// Convex polytope as an intersection of halfspaces with enumerated vertices.
// d = 2: vertices counter-clockwise, halfspaces[i] supports the edge
// vertices[i] -> vertices[i+1]. d = 3: faces[i] lists the vertices of the
// facet on halfspaces[i], counter-clockwise seen from outside.
struct Polytope {
    int d = 0;
    std::vector<Halfspace> halfspaces;
    std::vector<Vector> vertices;
    std::vector<std::vector<int>> faces;

    // Vertex enumeration: d=2 pairwise intersections, d=3 triple intersections,
    // each followed by a feasibility filter. The input must be bounded.
    static Polytope from_halfspaces(const std::vector<Halfspace>& hs, int d, double tol = 1e-9);
    // Convex hull of planar points (d = 2 only).
    static Polytope from_vertices_2d(std::vector<Vector> pts);

    Polytope scaled(double lambda) const;
    Polytope transformed(const Matrix& Q, const Vector& t) const;  // x -> Qx + t, Q orthogonal
    Vector vertex_centroid() const;
    double inradius_at(const Vector& z) const;      // min slack, negative outside
    double circumradius_at(const Vector& z) const;  // max vertex distance
    bool contains(const Vector& x, double tol = 1e-9) const;
};

// Delta(H) ∩ (halfspaces of `others` containing z(H)).
Polytope cell_polytope(std::span<const Hyperplane> tuple, std::span<const Hyperplane> others);
Polytope cell_polytope(std::span<const Hyperplane> tuple, std::span<const Hyperplane> others, const Inball& ib);

double polytope_size(const Polytope& P, const SizeFunctional& sigma);
double polytope_volume(const Polytope& P);
double polytope_surface(const Polytope& P);

// Phi(K) = 2 ∫ h(K, u) sigma(du), sigma the normalized spherical measure.
double phi_mean_width(const Ball& K);
double phi_mean_width(const Polytope& K);

double deviation_theta(const Polytope& P);

// Rotation matrix helper for tests and experiments.
template <class RngT>
Matrix random_rotation(int d, RngT& rng) {
    Matrix A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix Q = qr.householderQ();
    if (Q.determinant() < 0) Q.col(0) *= -1.0;
    return Q;
}

}  // namespace hypermosaic
