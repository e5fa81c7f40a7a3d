#pragma once

#include <stdexcept>

namespace ehsim {

// Error categories, mapped 1:1 onto CLI exit codes (see tools/ehsim.cpp):
// config 1, solver 2, instability 3.

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A demand policy whose mean net energy flow into the battery is not
// positive: the available space has no steady state and no decay rate,
// so the harness refuses to simulate it.
struct instability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Too few observations to estimate a tail quantity.
struct undersampled_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ehsim
