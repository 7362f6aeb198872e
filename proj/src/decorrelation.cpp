#include <algorithm>
#include <cmath>

#include "hypermosaic/mosaic.hpp"
#include "hypermosaic/parallel.hpp"
#include "hypermosaic/stopping.hpp"

namespace hypermosaic {

namespace {

// Events A at the reference points of one realization. Only cells whose
// observed size already exceeds u can qualify; the region is grown until
// those are certified by their hull and by B(z, slack r/cos alpha).
std::vector<char> events_in_realization(const DecorrelationOptions& opt, const std::vector<Vector>& points,
                                        const ConeSystem& cones, Rng& rng) {
    const double rho = opt.neighborhood;
    const double xmax = points.back()[0];
    const Box window{Vector::Constant(2, -rho), (Vector(2) << xmax + rho, rho).finished()};
    const Ball wb = window.circumball();
    const ProcessParams p{opt.gamma, 2, 0};
    Realization w = sample(p, {wb.center, wb.radius + guard_radius(opt.gamma, 2, window.volume())}, rng);
    std::vector<char> hit(points.size(), 0);

    auto near = [&](const Vector& z) {
        std::vector<int> idx;
        for (std::size_t k = 0; k < points.size(); ++k)
            if ((z - points[k]).norm() < rho) idx.push_back(static_cast<int>(k));
        return idx;
    };
    std::vector<CellRecord> pending;
    for (auto& c : extract_cells(w, window))
        if (!near(c.center).empty()) pending.push_back(std::move(c));

    const double ca = std::cos(opt.alpha), c3 = std::cos(3.0 * opt.alpha);
    std::size_t seen = 0;
    while (!pending.empty()) {
        std::vector<CellRecord> next;
        double target = 0.0;
        for (auto& c : pending) {
            // a hyperplane added by extension may now meet the inball
            bool empty = true;
            for (std::size_t k = seen; k < w.size() && empty; ++k)
                if (std::find(c.tuple.begin(), c.tuple.end(), static_cast<int>(k)) == c.tuple.end() &&
                    w.hyperplanes[k].distance(c.center) < c.inradius - kEmptyTol * (1 + c.inradius))
                    empty = false;
            if (!empty) continue;
            attach_body(c, w);
            if (c.size(opt.sigma) <= opt.u_threshold) continue;
            const double need = std::max(c.body->circumradius_at(w.region.center),
                                         (c.center - w.region.center).norm() + opt.primed_slack * c.inradius / ca);
            if (need < w.region.radius) {
                const double Rp = primed_radius(c.center, w.hyperplanes, cones);
                if (Rp <= opt.primed_slack * c.inradius / (ca * c3))
                    for (int k : near(c.center)) hit[k] = 1;
                continue;
            }
            target = std::max(target, need * 1.02);
            next.push_back(std::move(c));
        }
        if (next.empty()) break;
        seen = w.size();
        extend(w, target, rng);
        pending = std::move(next);
    }
    return hit;
}

}  // namespace

DecorrelationResult decorrelation_experiment(const DecorrelationOptions& opt) {
    if (opt.distances.empty()) throw PreconditionViolated("empty distance grid");
    for (double dist : opt.distances)
        if (!(dist > 2.0 * opt.neighborhood))
            throw PreconditionViolated("distance must exceed twice the neighbourhood radius (cells would overlap)");
    if (!std::is_sorted(opt.distances.begin(), opt.distances.end()))
        throw PreconditionViolated("distance grid must be ascending");
    const auto cones = build_cone_system(2, opt.alpha);
    std::vector<Vector> points{Vector::Zero(2)};
    for (double dist : opt.distances) points.push_back((Vector(2) << dist, 0.0).finished());

    const std::size_t n = opt.replicates;
    std::vector<std::vector<char>> hits(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(opt.seed, i);
        hits[i] = events_in_realization(opt, points, cones, rng);
    });

    DecorrelationResult res;
    const double nn = static_cast<double>(n);
    for (std::size_t k = 1; k < points.size(); ++k) {
        double a = 0, b = 0, ab = 0;
        for (const auto& h : hits) {
            a += h[0];
            b += h[k];
            ab += h[0] && h[k];
        }
        DecorrelationRow row;
        row.distance = opt.distances[k - 1];
        row.p_a = a / nn;
        row.p_b = b / nn;
        row.p_ab = ab / nn;
        if (a < 10 || b < 10)
            throw InsufficientSamples("event probability below 10/replicates; lower u or raise replicates");
        row.ratio = row.p_ab / (row.p_a * row.p_b);
        // delta method on the three indicator means
        double ss = 0.0;
        for (const auto& h : hits) {
            const double f = (h[0] && h[k]) / (row.p_a * row.p_b) - row.ratio * (h[0] / row.p_a + h[k] / row.p_b);
            const double f0 = -row.ratio;  // mean of the influence values
            ss += (f - f0) * (f - f0);
        }
        row.se = std::sqrt(ss / (nn - 1.0) / nn);
        row.ci_low = row.ratio - 3.0 * row.se;
        row.ci_high = row.ratio + 3.0 * row.se;
        res.rows.push_back(row);
    }
    const auto& last = res.rows.back();
    res.far_bounded = last.ratio <= 2.0 + 3.0 * last.se;
    res.far_lower = last.ratio >= 1.0 - 3.0 * last.se;
    res.non_increasing = true;
    for (std::size_t k = 1; k < res.rows.size(); ++k)
        if (res.rows[k].ratio > res.rows[k - 1].ratio + 3.0 * std::hypot(res.rows[k].se, res.rows[k - 1].se))
            res.non_increasing = false;
    return res;
}

}  // namespace hypermosaic
