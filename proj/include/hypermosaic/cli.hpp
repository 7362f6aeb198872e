#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypermosaic::cli {

inline constexpr const char* kVersion = "0.1.0";

using KeyValues = std::map<std::string, std::string>;

// Flat `key = value` lines; '#' starts a comment. ConfigInvalid on lines
// without '=' or with an empty key.
KeyValues parse_key_values(std::istream& is);
KeyValues read_config_file(const std::string& path);

// Later maps win.
KeyValues merge(const KeyValues& base, const KeyValues& over);

struct ExperimentConfig {
    std::string experiment;
    std::string tag;  // appended to output file names
    int d = 2;
    bool d_given = false;  // some experiments sweep d unless it is set
    double gamma = 1.0;
    std::vector<double> log_n;  // empty: experiment default
    double c = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> window;  // lo_1..lo_d, hi_1..hi_d; empty: unit cube
    std::string sigma = "volume";
    std::size_t replicates = 0;  // 0: experiment default
    std::size_t samples = 0;
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    double tolerance_sigma = 3.0;
    unsigned threads = 0;  // 0: hardware concurrency
    KeyValues extra;  // experiment-specific keys, validated per experiment
};

const std::vector<std::string>& experiment_names();

// Unknown experiment, unknown key or unparsable value -> ConfigInvalid.
ExperimentConfig make_config(const std::string& experiment, const KeyValues& kv);

struct Metric {
    std::string name;
    double estimate = 0.0;
    double target = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    bool gated = false;  // counts towards the report's pass flag
    bool pass = true;
};

struct ExperimentReport {
    std::string experiment;
    nlohmann::ordered_json params;
    std::uint64_t seed = 0;
    std::vector<Metric> metrics;
    std::vector<std::string> files;
    double wall_seconds = 0.0;
    bool pass = false;

    nlohmann::ordered_json to_json() const;
};

// Runs the experiment and writes <output_dir>/<experiment>[_<tag>].json plus
// its CSV tables. Module errors propagate with the experiment name prefixed.
ExperimentReport run(const ExperimentConfig& config);

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;
    std::vector<ExperimentReport> reports;
};

// The acceptance suite: `full` uses the sizes of the acceptance criteria,
// otherwise reduced replicate counts. Progress lines go to `log` if given.
std::vector<CriterionResult> verify_all(bool full, const std::string& output_dir, std::ostream* log = nullptr);

}  // namespace hypermosaic::cli
