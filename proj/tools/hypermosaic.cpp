#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypermosaic/cli.hpp"
#include "hypermosaic/errors.hpp"

namespace hc = hypermosaic::cli;

int main(int argc, char** argv) {
    CLI::App app{"hypermosaic: Poisson hyperplane mosaic experiments"};
    app.set_version_flag("--version", std::string(hc::kVersion));

    std::string experiment, config_path, suite = "quick";
    std::vector<std::string> sets;
    // flags are collected as strings and validated together with the config file
    hc::KeyValues flags;
    const std::vector<std::pair<const char*, const char*>> flag_keys{
        {"--d", "dimension"},
        {"--gamma", "hyperplane intensity"},
        {"--n", "n value(s): e6, e^6 or a number; comma separated"},
        {"--c", "mark threshold"},
        {"--window", "lo_1..lo_d,hi_1..hi_d"},
        {"--sigma", "size functional: volume or surface_area"},
        {"--replicates", "independent replicates"},
        {"--samples", "Monte Carlo samples or cells"},
        {"--seed", "master seed (HYPERMOSAIC_SEED overrides the config file)"},
        {"--output-dir", "directory for the JSON report and CSV tables"},
        {"--tolerance-sigma", "width of the acceptance bands in standard errors"},
        {"--tag", "suffix for output file names"},
        {"--threads", "worker threads, 0 = all cores"},
    };
    std::vector<std::string> values(flag_keys.size());
    for (std::size_t i = 0; i < flag_keys.size(); ++i) app.add_option(flag_keys[i].first, values[i], flag_keys[i].second);

    std::string names;
    for (const auto& n : hc::experiment_names()) names += "\n  " + n;
    app.add_option("experiment", experiment, "experiment name, or `verify`" + names)->required();
    app.add_option("--config", config_path, "flat key = value file; flags win over it");
    app.add_option("--set", sets, "experiment-specific key=value (repeatable)");
    app.add_option("--suite", suite, "verify suite")->check(CLI::IsMember({"quick", "full"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (experiment == "verify") {
            std::string dir = ".";
            if (!values[9].empty()) dir = values[9];
            const auto results = hc::verify_all(suite == "full", dir, &std::cout);
            bool all = true;
            for (const auto& r : results) all = all && r.pass;
            std::cout << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << "\n";
            return all ? 0 : 1;
        }

        hc::KeyValues kv;
        if (!config_path.empty()) kv = hc::read_config_file(config_path);
        if (const char* env = std::getenv("HYPERMOSAIC_SEED"); env && *env) kv["seed"] = env;
        for (std::size_t i = 0; i < flag_keys.size(); ++i)
            if (!values[i].empty()) flags[std::string(flag_keys[i].first).substr(2)] = values[i];
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw hypermosaic::ConfigInvalid("--set expects key=value, got '" + s + "'");
            flags[s.substr(0, eq)] = s.substr(eq + 1);
        }
        const auto config = hc::make_config(experiment, hc::merge(kv, flags));
        const auto report = hc::run(config);
        std::cout << report.to_json().dump(2) << "\n";
        return report.pass ? 0 : 1;
    } catch (const hypermosaic::Error& e) {
        std::cerr << "error in " << experiment << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error in " << experiment << ": " << e.what() << "\n";
        return 3;
    }
}
