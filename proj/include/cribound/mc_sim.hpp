#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cribound/loss.hpp"
#include "cribound/model.hpp"

namespace cri {

// A measurable map from one observed sample (length model.rep()) to a point
// estimate. Output dimension is up to the estimator; the scalar estimators
// below return one coordinate.
struct estimator {
    std::string name;
    std::function<std::vector<double>(const std::vector<double>&)> map;
};

// Sample mean of the observations.
estimator mean_estimator();

// Sample mean hard-thresholded at tau: returns 0 when |mean| <= tau. The
// classical superefficient-at-zero construction the risk bounds are tested
// against.
estimator hodges_estimator(double tau);

// Ignores the sample and returns c. Useful as a worst-case probe.
estimator constant_estimator(double c);

struct risk_estimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(reps)
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
};

// Monte Carlo risk E_m[ loss(|est(Z) - theta(m)|) ] over `reps` independent
// samples. Deterministic given the seed and independent of thread count:
// replications run in fixed blocks of 1024 with per-block derived seeds,
// combined in block order.
risk_estimate mc_risk(const estimator& est, const model& m, const loss_fn& loss,
                      std::int64_t reps, std::uint64_t seed);

// Exact minimizer detail for oracle_min_risk. When upper_bound_only is set
// the per-coordinate search ran on a grid (non-convex loss), so value is a
// certified feasible risk but possibly not the exact minimum.
struct oracle_solution {
    double value = 0.0;
    std::vector<double> v;  // estimate assigned to each atom
    double budget_used = 0.0;
    double lambda = 0.0;
    bool upper_bound_only = false;
};

// Smallest achievable risk at theta1 over all estimators v : support -> R
// subject to the risk-at-theta0 budget sum_j p0_j loss(|v_j - theta0|) <=
// delta_budget. Both models must be discrete on the same support with at
// most 64 atoms. Solved by dualizing the budget (bisection on the
// multiplier, per-coordinate 1-D minimization) followed by a slack-spending
// sweep; the returned assignment is always feasible, so the value is an
// upper bound on the true constrained minimum even in grid-search mode.
// Throws infeasible_budget_error when loss(0) > delta_budget (no estimator
// can meet the budget).
double oracle_min_risk(const model& p0, const model& p1, double theta0, double theta1,
                       const loss_fn& loss, double delta_budget,
                       oracle_solution* detail = nullptr);

struct violation_case {
    std::int64_t index = 0;
    std::int64_t atoms = 0;
    double theta0 = 0.0;
    double theta1 = 0.0;
    double budget = 0.0;
    double bound = 0.0;
    double oracle = 0.0;
    double gap = 0.0;  // bound - oracle; positive past tolerance is a violation
};

struct violation_report {
    std::int64_t instances = 0;
    std::int64_t violations = 0;
    std::string loss_name;
    std::uint64_t seed = 0;
    double max_gap = 0.0;
    std::vector<violation_case> examples;  // first violations, at most 10
};

// Randomized soundness probe: draws random discrete two-model instances
// (2 to 8 atoms, random pmfs and parameters), computes the certified lower
// bound and the oracle minimum for each, and counts instances where the
// oracle beats the bound by more than 1e-6. A sound bound yields zero
// violations for every seed.
violation_report violation_search(std::int64_t instances, const loss_fn& loss,
                                  std::uint64_t seed);

}  // namespace cri
