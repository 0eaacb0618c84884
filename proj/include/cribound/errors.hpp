#pragma once

#include <stdexcept>
#include <string>

namespace cri {

// Base class for every error the library raises on purpose, so callers can
// catch the whole family with one handler.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller passed something structurally wrong: mismatched dimensions, an
// affinity below 1, a negative budget, and the like.
struct invalid_input_error : error {
    using error::error;
};

// Malformed spec strings, bad experiment configuration, empty parameter
// intervals. These come from user-facing input, not from library internals.
struct config_error : error {
    using error::error;
};

// A numerical procedure failed to deliver its promised accuracy: quadrature
// non-convergence, impossible affinity values, broken sampler acceptance.
struct numeric_error : error {
    using error::error;
};

// P0 vanishes somewhere P1 puts mass, so the density-ratio integral does not
// exist.
struct absolute_continuity_error : numeric_error {
    using numeric_error::numeric_error;
};

// The constrained-minimization budget is below the smallest achievable risk
// at P0 (possible only when the loss is positive at zero).
struct infeasible_budget_error : error {
    using error::error;
};

}  // namespace cri
