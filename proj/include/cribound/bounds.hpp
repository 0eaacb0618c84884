#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cribound/affinity.hpp"
#include "cribound/loss.hpp"
#include "cribound/model.hpp"

namespace cri {

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

// A certified lower bound on the risk at theta1 for any estimator whose risk
// at theta0 is within budget. delta_sep is the separation term the bound is
// built from (see separation() in loss.hpp), delta_budget the constraint at
// theta0 (a k-th moment bound when branch is a power branch), and value the
// bound itself. When the affinity overflowed, value is 0: the bound is valid
// but vacuous, and affinity carries +infinity.
struct bound_report {
    double delta_sep = 0.0;
    double delta_budget = 0.0;
    double affinity = 1.0;
    double value = 0.0;
    std::string branch;
    std::optional<double> k;
    bool affinity_overflow = false;
};

// Two-point bound for a convex loss: with Delta = 2 l(d/2),
//   value = hinge(sqrt(Delta) - sqrt(affinity * delta_budget))^2.
// Accepts convex-class losses and power losses with exponent >= 1.
bound_report bound_convex(const loss_fn& loss, double distance, double delta_budget,
                          const affinity_result& affinity);

// Same hinge form with the weaker separation Delta = l(d/2); valid for any
// non-decreasing loss.
bound_report bound_generic(const loss_fn& loss, double distance, double delta_budget,
                           const affinity_result& affinity);

// Moment version for l(t) = t^k. delta_budget_k constrains E0 |v - theta0|^k.
// For k <= 2:  value = hinge(d^{k/2} - sqrt(affinity * delta_budget_k))^2,
// for k >= 2:  value = hinge(d - sqrt(affinity * delta_budget_k^{2/k}))^k;
// the two branches agree at k = 2 and the implementation cross-checks that.
bound_report bound_power(const loss_fn& loss, double distance, double delta_budget_k,
                         const affinity_result& affinity);

enum class affinity_choice { automatic, closed_form, quadrature, monte_carlo };

struct bound_options {
    affinity_choice affinity = affinity_choice::automatic;
    std::int64_t mc_count = 1000000;  // draws when affinity is monte_carlo
    std::uint64_t mc_seed = 0;
};

// End-to-end bound between two models: computes the parameter distance, the
// affinity (closed form for matching gaussian pairs under `automatic`, else
// quadrature), and dispatches on the loss class (power losses take the moment
// branch).
bound_report bound_from_models(const model& p1, const model& p0, const loss_fn& loss,
                               double delta_budget, const bound_options& opt = {});

}  // namespace cri
