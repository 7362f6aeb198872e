#include "hypermosaic/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hypermosaic {

MinimizeResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0, double step,
                           double ftol, double xtol, int max_iter) {
    const int d = static_cast<int>(x0.size());
    std::vector<Vector> pts(d + 1, x0);
    std::vector<double> vals(d + 1);
    for (int i = 0; i < d; ++i) pts[i + 1][i] += step;
    for (int i = 0; i <= d; ++i) vals[i] = f(pts[i]);
    std::vector<int> order(d + 1);
    int it = 0;
    for (; it < max_iter; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        const int best = order.front(), worst = order.back(), second = order[d - 1];
        double diam = 0.0;
        for (int i = 0; i <= d; ++i) diam = std::max(diam, (pts[i] - pts[best]).norm());
        if (vals[worst] - vals[best] <= ftol && diam <= xtol) break;
        if (diam <= 1e-15 * (1.0 + pts[best].norm())) break;

        Vector centroid = Vector::Zero(d);
        for (int i = 0; i <= d; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= d;
        const Vector xr = centroid + (centroid - pts[worst]);
        const double fr = f(xr);
        if (fr < vals[best]) {
            const Vector xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid)) : Vector(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = f(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (int i = 0; i <= d; ++i) {
            if (i == best) continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = f(pts[i]);
        }
    }
    const int best = static_cast<int>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    return {pts[best], vals[best], it};
}

RootResult bisect(const std::function<double(double)>& g, double lo, double hi, double xtol, int max_iter) {
    double glo = g(lo), ghi = g(hi);
    if (glo == 0.0) return {lo, 0.0, 0};
    if (ghi == 0.0) return {hi, 0.0, 0};
    if ((glo > 0) == (ghi > 0)) throw NoRoot("bracket does not change sign");
    RootResult res;
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo <= xtol) break;
        const double gm = g(mid);
        if (gm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    res.x = 0.5 * (lo + hi);
    res.residual = std::fabs(g(res.x));
    return res;
}

}  // namespace hypermosaic
