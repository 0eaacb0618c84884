#pragma once

#include <functional>

#include "cribound/errors.hpp"

namespace cri {

struct quad_result {
    double value = 0.0;
    double error = 0.0;   // estimated absolute error
    int intervals = 0;    // panels in the final subdivision
};

struct quad_options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_intervals = 4000;
};

// Adaptive Gauss-Kronrod (G7, K15) on [a, b]: the worst panel by error
// estimate is split until the summed |K15 - G7| estimate meets tolerance.
// Throws numeric_error with diagnostics when the budget runs out first.
quad_result integrate(const std::function<double(double)>& f, double a, double b,
                      const quad_options& opt = {});

}  // namespace cri
