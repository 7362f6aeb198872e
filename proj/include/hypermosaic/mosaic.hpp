#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hypermosaic/geometry.hpp"
#include "hypermosaic/process.hpp"
#include "hypermosaic/stats.hpp"
#include "hypermosaic/stopping.hpp"

namespace hypermosaic {

inline constexpr double kEmptyTol = 1e-12;

struct CellRecord {
    std::vector<int> tuple;  // d+1 indices into the realization
    Vector center;
    double inradius = 0.0;
    std::optional<Polytope> body;
    double volume = std::numeric_limits<double>::quiet_NaN();
    double surface = std::numeric_limits<double>::quiet_NaN();
    bool certified = false;
    std::optional<double> stopping_radius;

    Inball inball() const { return {center, inradius, {}}; }
    double size(const SizeFunctional& s) const { return s.kind == SizeKind::volume ? volume : surface; }
};

// Every (d+1)-tuple whose inball is empty in w, has its centre in `window`
// and radius >= min_inradius. Throws WindowNotContained unless the window
// lies inside w.region.
std::vector<CellRecord> extract_cells(const Realization& w, const Window& window, double min_inradius = 0.0);

// Polytope and sizes from all hyperplanes of w.
void attach_body(CellRecord& rec, const Realization& w);

// Stopping-radius certification: certified iff B(z, R) ⊆ w.region.
CellRecord certify_cell(CellRecord rec, const Realization& w, const ConeSystem& cones);

// How a window cell is known to be unaffected by hyperplanes outside the region.
enum class Certification {
    stopping_radius,  // B(z, R(H, w)) inside the region
    hull,             // every vertex of the observed cell inside the region
    inball,           // B(H) inside the region (enough for the inradius and the emptiness test)
};

// Guard added to the window circumradius: a cell centred in the window that
// touches an unobserved hyperplane has inradius above it, which happens with
// expected count below `miss` per realization.
double guard_radius(double gamma, int d, double window_volume, double miss = 1e-6);

struct WindowCells {
    std::vector<CellRecord> cells;
    std::size_t first_pass_certified = 0;  // before any extension
    double final_region_radius = 0.0;
};

// Extracts the window cells of a fresh realization and grows the region by
// shell sampling until each is certified under `rule` (or max_region_radius
// is reached; the rest stay uncertified). `keep` may drop cells early, e.g.
// by a size lower bound, so they never trigger extensions.
struct WindowOptions {
    Certification rule = Certification::stopping_radius;
    double min_inradius = 0.0;
    bool with_body = false;
    double max_region_radius = 0.0;  // 0: 50 window circumradii + 500/gamma
    double alpha = std::numbers::pi / 12.0;
    double guard = -1.0;             // < 0: guard_radius()
    // cells whose observed size (an upper bound of the final one) is at most
    // this are dropped before certification; needs with_body
    double size_floor = -1.0;
    SizeFunctional sigma{};
};

WindowCells window_cells(const ProcessParams& p, const Window& window, const WindowOptions& opt, Rng& rng,
                         Realization* keep_realization = nullptr);

struct EmpiricalDistribution {
    std::vector<double> values;  // ascending

    static EmpiricalDistribution from(std::vector<double> xs);
    std::size_t n() const { return values.size(); }
    double cdf(double x) const;       // right-continuous
    double survival(double x) const;  // 1 - cdf
    void write_csv(std::ostream& os) const;
    static EmpiricalDistribution read_csv(std::istream& is);
};

class GTransform {
public:
    explicit GTransform(const EmpiricalDistribution& F);
    double operator()(double x) const;
    // smallest sample value x with G(x) >= y; OutOfRange above n + 1
    double inverse(double y) const;
    double max_value() const;  // n + 1
    const EmpiricalDistribution& distribution() const { return *F_; }

private:
    const EmpiricalDistribution* F_;
};

inline GTransform g_transform(const EmpiricalDistribution& F) { return GTransform(F); }
inline double g_inverse(const GTransform& G, double y) { return G.inverse(y); }

struct TypicalCellOptions {
    Certification rule = Certification::stopping_radius;
    // cube [-s/2, s/2]^d scaled by 1/gamma; at s = 1 a realization holds about
    // 0.3 cells (d = 2), so pooled cells are close to independent
    double window_side = 1.0;
    bool with_body = false;
    SizeFunctional sigma{};
    double alpha = std::numbers::pi / 12.0;
};

struct TypicalCellSample {
    std::vector<CellRecord> cells;       // certified only
    EmpiricalDistribution sizes;         // empty unless with_body
    std::vector<double> cells_per_volume;  // one entry per realization
    std::size_t realizations = 0;
    std::size_t uncertified = 0;
    double first_pass_certified_fraction = 1.0;
};

// Certified cells with centres in independent copies of the window until at
// least target_count have accumulated. Throws CertificationStarvation when
// fewer than half the window cells end up certified.
TypicalCellSample sample_typical_cells(const ProcessParams& params, std::size_t target_count,
                                       const TypicalCellOptions& opt = {});

struct GammaDEstimate {
    double value = 0.0;
    double se = 0.0;
    double spanning_fraction = 0.0;
    double spanning_se = 0.0;
};

// Monte Carlo of ((2 gamma)^d / (d+1)) ∫_P Delta_d dσ^{d+1}
GammaDEstimate gamma_d_estimate(int d, double gamma, std::size_t mc_samples, std::uint64_t seed);

// Cell containing the origin (d = 2): every hyperplane of a realization on a
// region grown until all vertices are inside.
Polytope zero_cell(const ProcessParams& p, Rng& rng, double initial_radius = 0.0);

// CSV `z_1..z_d,r,volume,surface,certified`
void write_cells_csv(const std::vector<CellRecord>& cells, int d, std::ostream& os);

}  // namespace hypermosaic
