#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cribound/model.hpp"

namespace cri {

// How an affinity value was obtained. "tensorized" marks an n-fold power of a
// separately computed marginal affinity.
enum class affinity_method { closed_form, tensorized, quadrature, monte_carlo };

std::string to_string(affinity_method m);

// The chi-squared affinity 1 + chi^2(P1 || P0) = E_{P0}[(dP1/dP0)^2]. Always
// >= 1 for genuine probability pairs; value is +infinity with overflow set
// when the true affinity exceeds the double range (callers treat that as a
// vacuous lower bound rather than propagating inf through arithmetic).
struct affinity_result {
    double value = 1.0;
    affinity_method method = affinity_method::closed_form;
    double error_estimate = 0.0;
    std::string meta;
    bool overflow = false;
};

// N(theta1, sigma^2)^n vs N(theta0, sigma^2)^n: exp(n (theta1-theta0)^2 /
// sigma^2) exactly. Requires equal variances and equal product counts; pairs
// with unequal variances go through affinity_quadrature (and diverge when the
// numerator tail is heavier).
affinity_result affinity_gaussian(const model& p1, const model& p0);

// Lift a marginal affinity to an n-fold product: value^n, with the relative
// error scaled by n. Requires marginal.value >= 1.
affinity_result affinity_product(const affinity_result& marginal, std::int64_t n);

// Adaptive quadrature of p1^2/p0 for continuous marginals, exact summation
// for discrete ones (identical supports required). Product pairs compute the
// marginal affinity and tensorize. Raises absolute_continuity_error when mass
// of p1 sits where p0 vanishes, and numeric_error when the integrand fails to
// decay at the truncation boundary (divergent affinity).
affinity_result affinity_quadrature(const model& p1, const model& p0);

// Monte Carlo estimate of E_{P0}[(dP1/dP0)^2] from `count` draws out of p0.
// Deterministic given the seed and independent of thread count: draws are
// generated in fixed blocks with per-block derived seeds and combined in
// block order. error_estimate is the standard error of the mean.
affinity_result affinity_monte_carlo(const model& p1, const model& p0, std::int64_t count,
                                     std::uint64_t seed);

// Closed form when the pair is gaussian with matching variances and counts,
// quadrature otherwise.
affinity_result affinity_auto(const model& p1, const model& p0);

// One grid point of the small-t tilt diagnostic: chi2 is the divergence of
// the tilted marginal from its base, ratio = chi2 / t^2, and c_t is checked
// against the second-order drift cap (phi_smoothness/2) t^2 E0[g^2].
struct lemma_tilt_row {
    double t = 0.0;
    double chi2 = 0.0;
    double ratio = 0.0;
    double c_t = 1.0;
    double c_t_cap = 0.0;
    bool c_t_ok = false;
};

struct lemma_tilt_report {
    std::vector<lemma_tilt_row> rows;
    double second_moment = 0.0;     // E0[g^2], the t -> 0 limit of ratio
    bool ratio_trend_monotone = false;  // |ratio - E0[g^2]| shrinks along the grid
    bool all_c_t_ok = false;
};

// Checks that chi^2(P_{t,g} || P0) grows like t^2 E0[g^2] as t -> 0: the grid
// must be strictly decreasing and positive, and the report records whether the
// ratio converges monotonically onto E0[g^2] with every normalizer inside its
// drift cap.
lemma_tilt_report verify_lemma_tilt(const model& base, const score& g,
                                    const std::vector<double>& t_grid,
                                    double phi_smoothness = default_phi_smoothness);

}  // namespace cri
