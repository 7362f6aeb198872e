#include "hypermosaic/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "hypermosaic/errors.hpp"

namespace hypermosaic {

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double value, error;
};

Segment gk15(const std::function<double(double)>& f, double a, double b, int& evals) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * kWgk[7], gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double s = f(c - x) + f(c + x);
        kron += kWgk[j] * s;
        if (j % 2 == 1) gauss += kWg[j / 2] * s;
    }
    evals += 15;
    return {kron * h, std::fabs((kron - gauss) * h)};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, const Quadrature& q) {
    QuadratureResult out;
    if (a == b) return out;
    // global adaptive bisection: always split the interval with the largest error
    struct Piece {
        double a, b;
        Segment s;
        int depth;
        bool operator<(const Piece& o) const { return s.error < o.s.error; }
    };
    std::priority_queue<Piece> heap;
    heap.push({a, b, gk15(f, a, b, out.evaluations), 0});
    double value = heap.top().s.value, error = heap.top().s.error;
    std::vector<Piece> done;
    const int max_pieces = 64 * q.max_depth;
    while (!heap.empty()) {
        const double tol = std::max(q.abs_tol, q.rel_tol * std::fabs(value));
        if (error <= tol) break;
        Piece p = heap.top();
        heap.pop();
        const double m = 0.5 * (p.a + p.b);
        if (p.depth >= q.max_depth || m <= p.a || m >= p.b) {
            // cannot refine further; keep it and stop if it dominates the error
            done.push_back(p);
            if (heap.empty() || static_cast<int>(done.size()) > max_pieces)
                throw QuadratureNotConverged("error estimate above tolerance at maximum depth");
            continue;
        }
        const Segment l = gk15(f, p.a, m, out.evaluations), r = gk15(f, m, p.b, out.evaluations);
        value += l.value + r.value - p.s.value;
        error += l.error + r.error - p.s.error;
        heap.push({p.a, m, l, p.depth + 1});
        heap.push({m, p.b, r, p.depth + 1});
        if (static_cast<int>(heap.size()) > max_pieces)
            throw QuadratureNotConverged("too many subintervals");
    }
    out.value = value;
    out.error = error;
    return out;
}

}  // namespace hypermosaic
