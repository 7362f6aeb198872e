#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hypermosaic/geometry.hpp"
#include "hypermosaic/rng.hpp"

namespace hypermosaic {

struct ProcessParams {
    double gamma = 1.0;
    int d = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

// Hyperplanes of a stationary isotropic Poisson process that hit `region`.
// The region may be grown later with extend(); the hyperplanes added then are
// exactly those hitting the shell between the old and the new ball.
struct Realization {
    std::vector<Hyperplane> hyperplanes;
    Ball region;
    ProcessParams params;

    std::size_t size() const { return hyperplanes.size(); }
};

// mu(H_B) = 2r for the motion invariant measure normalised as in the model
double mu_hit(const Ball& K);

Realization sample(const ProcessParams& params, const Ball& region);
Realization sample(const ProcessParams& params, const Ball& region, Rng& rng);

// Grow the region to `radius` (same centre) by adding the hyperplanes that
// hit the new ball but miss the old one. No-op if radius <= current radius.
void extend(Realization& w, double radius, Rng& rng);

// Poisson parameter gamma * Phi(K) of the number of hyperplanes hitting K
double hit_count_law(const Ball& K, double gamma);
double hit_count_law(const Polytope& K, double gamma);

// number of hyperplanes of w hitting K (K must lie in w.region for this to be
// a sample of the law above)
std::size_t hit_count(const Realization& w, const Ball& K);

// CSV `u_1,...,u_d,r` with 17 significant digits and the JSON sidecar text.
void write_csv(const Realization& w, std::ostream& os);
std::string sidecar_json(const Realization& w);
Realization read_csv(std::istream& is, const ProcessParams& params, const Ball& region);

}  // namespace hypermosaic
