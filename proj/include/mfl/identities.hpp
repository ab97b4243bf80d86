#pragma once

// Closed-form identities the library must satisfy to rounding error, gathered
// into one report for the `verify` command and the acceptance run.

#include <string>
#include <vector>

namespace mfl {

struct IdentityResult {
    std::string name;
    double value = 0.0;      // worst residual observed
    double tolerance = 0.0;
    bool passed = false;
};

struct IdentityOptions {
    /// Factor applied to T = t^(-1/s) in the conservation checks; 1 leaves them exact.
    double conservation_T_scale = 1.0;
    int inversion_cases = 1000;
    unsigned long long seed = 20240601;
};

std::vector<IdentityResult> run_identity_suite(const IdentityOptions& options = {});

}  // namespace mfl
