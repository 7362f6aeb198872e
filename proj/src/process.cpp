#include "hypermosaic/process.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace hypermosaic {

void ProcessParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw PreconditionViolated("gamma must be positive");
    if (d < 2 || d > kMaxDim) throw PreconditionViolated("dimension must be in [2, 8]");
}

double mu_hit(const Ball& K) { return 2.0 * K.radius; }

namespace {

// hyperplanes at distance t in [lo, hi] from the centre, directions uniform
void add_layer(Realization& w, double lo, double hi, Rng& rng) {
    const auto& p = w.params;
    const long count = rng.poisson(2.0 * p.gamma * (hi - lo));
    w.hyperplanes.reserve(w.hyperplanes.size() + static_cast<std::size_t>(count));
    Vector u;
    for (long k = 0; k < count; ++k) {
        rng.unit_vector(u, p.d);
        const double t = rng.uniform(lo, hi);
        w.hyperplanes.push_back({u, w.region.center.dot(u) + t});
    }
}

}  // namespace

Realization sample(const ProcessParams& params, const Ball& region) {
    Rng rng(params.seed);
    return sample(params, region, rng);
}

Realization sample(const ProcessParams& params, const Ball& region, Rng& rng) {
    params.validate();
    if (!(region.radius > 0.0)) throw PreconditionViolated("region radius must be positive");
    if (region.dim() != params.d) throw PreconditionViolated("region dimension differs from params.d");
    Realization w{{}, region, params};
    add_layer(w, 0.0, region.radius, rng);
    return w;
}

void extend(Realization& w, double radius, Rng& rng) {
    if (!(radius > w.region.radius)) return;
    add_layer(w, w.region.radius, radius, rng);
    w.region.radius = radius;
}

double hit_count_law(const Ball& K, double gamma) { return gamma * phi_mean_width(K); }
double hit_count_law(const Polytope& K, double gamma) { return gamma * phi_mean_width(K); }

std::size_t hit_count(const Realization& w, const Ball& K) {
    std::size_t n = 0;
    for (const auto& h : w.hyperplanes) n += hits(h, K);
    return n;
}

void write_csv(const Realization& w, std::ostream& os) {
    const int d = w.params.d;
    for (int i = 0; i < d; ++i) os << "u_" << i + 1 << ',';
    os << "r\r\n";
    os << std::setprecision(17);
    for (const auto& h : w.hyperplanes) {
        for (int i = 0; i < d; ++i) os << h.u[i] << ',';
        os << h.r << "\r\n";
    }
}

std::string sidecar_json(const Realization& w) {
    nlohmann::ordered_json j;
    j["gamma"] = w.params.gamma;
    j["d"] = w.params.d;
    j["seed"] = w.params.seed;
    j["region"] = {{"center", std::vector<double>(w.region.center.data(), w.region.center.data() + w.region.dim())},
                   {"radius", w.region.radius}};
    j["count"] = w.hyperplanes.size();
    return j.dump(2);
}

Realization read_csv(std::istream& is, const ProcessParams& params, const Ball& region) {
    Realization w{{}, region, params};
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
        if (static_cast<int>(vals.size()) != params.d + 1) throw PreconditionViolated("CSV row has wrong width");
        Hyperplane h;
        h.u = Eigen::Map<const Eigen::VectorXd>(vals.data(), params.d);
        h.r = vals.back();
        w.hyperplanes.push_back(h);
    }
    return w;
}

}  // namespace hypermosaic
