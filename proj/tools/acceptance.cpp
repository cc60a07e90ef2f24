#include <cstdio>
#include <string>

#include "conelab/verify.hpp"

int main(int argc, char** argv) {
    const std::string suite = argc > 1 ? argv[1] : "all";
    std::vector<conelab::CheckResult> results;
    try {
        results = conelab::run_suite(suite);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
    int failed = 0;
    for (const auto& r : results) {
        std::printf("%s %2d %-14s metric=%.6g tol=%.6g time=%.2fs/%.0fs  %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.suite.c_str(), r.metric, r.tolerance, r.seconds, r.budget, r.detail.c_str());
        std::fflush(stdout);
        failed += !r.pass;
    }
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    return failed ? 1 : 0;
}
