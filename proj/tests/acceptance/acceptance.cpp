// Full acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.
#include <iostream>

#include "hypermosaic/cli.hpp"

int main() {
    const auto results = hypermosaic::cli::verify_all(true, ".", &std::cout);
    int failed = 0;
    for (const auto& r : results) failed += !r.pass;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
