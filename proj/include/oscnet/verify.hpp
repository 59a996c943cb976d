#pragma once

#include <string>
#include <vector>

#include "oscnet/neurons.hpp"

namespace oscnet {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Property suites: closed-form gradient oracles, finite-difference checks,
// attack containment, spontaneous-firing Monte Carlo. `params` feeds the
// neuron-level checks (fault injection in tests overrides it). A non-empty
// `only` list restricts to the named checks.
std::vector<CheckResult> run_verify_suites(const NeuronParams& params = NeuronParams{},
                                           const std::vector<std::string>& only = {});

} // namespace oscnet
