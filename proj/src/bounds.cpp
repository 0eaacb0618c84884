#include "cribound/bounds.hpp"

#include <cmath>
#include <sstream>

#include "cribound/numeric.hpp"

namespace cri {
namespace {

void check_inputs(double distance, double delta_budget, const affinity_result& affinity) {
    if (!(distance >= 0.0) || !std::isfinite(distance)) {
        throw invalid_input_error("parameter distance must be finite and >= 0");
    }
    if (!(delta_budget >= 0.0) || !std::isfinite(delta_budget)) {
        throw invalid_input_error("risk budget must be finite and >= 0");
    }
    if (!affinity.overflow && !(affinity.value >= 1.0)) {
        std::ostringstream msg;
        msg << "affinity " << affinity.value << " < 1 is not a valid chi-squared affinity";
        throw invalid_input_error(msg.str());
    }
}

bound_report hinge_squared_bound(double delta_sep, double delta_budget,
                                 const affinity_result& affinity, std::string branch) {
    bound_report r;
    r.delta_sep = delta_sep;
    r.delta_budget = delta_budget;
    r.affinity = affinity.value;
    r.branch = std::move(branch);
    r.affinity_overflow = affinity.overflow;
    r.value = affinity.overflow ? 0.0 : sq(hinge(std::sqrt(delta_sep) -
                                                 std::sqrt(affinity.value * delta_budget)));
    return r;
}

}  // namespace

bound_report bound_convex(const loss_fn& loss, double distance, double delta_budget,
                          const affinity_result& affinity) {
    bool convex = loss.cls() == loss_class::convex ||
                  (loss.is_power() && loss.exponent() >= 1.0);
    if (!convex) {
        throw invalid_input_error("loss '" + loss.name() + "' is not convex; use the generic "
                                  "bound");
    }
    check_inputs(distance, delta_budget, affinity);
    return hinge_squared_bound(2.0 * loss(0.5 * distance), delta_budget, affinity,
                               "convex_thm1");
}

bound_report bound_generic(const loss_fn& loss, double distance, double delta_budget,
                           const affinity_result& affinity) {
    check_inputs(distance, delta_budget, affinity);
    return hinge_squared_bound(loss(0.5 * distance), delta_budget, affinity, "generic_cor1");
}

bound_report bound_power(const loss_fn& loss, double distance, double delta_budget_k,
                         const affinity_result& affinity) {
    if (!loss.is_power()) {
        throw invalid_input_error("loss '" + loss.name() + "' is not a power loss");
    }
    check_inputs(distance, delta_budget_k, affinity);
    double k = loss.exponent();

    bound_report r;
    r.delta_sep = distance;
    r.delta_budget = delta_budget_k;
    r.affinity = affinity.value;
    r.k = k;
    r.affinity_overflow = affinity.overflow;

    if (affinity.overflow) {
        r.value = 0.0;
        r.branch = k <= 2.0 ? "power_small_k" : "power_large_k";
        return r;
    }

    auto small_k = [&]() {
        return sq(hinge(std::pow(distance, 0.5 * k) -
                        std::sqrt(affinity.value * delta_budget_k)));
    };
    auto large_k = [&]() {
        double budget_sq = std::pow(delta_budget_k, 2.0 / k);
        return std::pow(hinge(distance - std::sqrt(affinity.value * budget_sq)), k);
    };

    if (k < 2.0) {
        r.value = small_k();
        r.branch = "power_small_k";
    } else if (k > 2.0) {
        r.value = large_k();
        r.branch = "power_large_k";
    } else {
        // Both branches are exact at k = 2; a gap means one of them is broken.
        double a = small_k();
        double b = large_k();
        if (std::abs(a - b) > 1e-12) {
            std::ostringstream msg;
            msg << "power bound branches disagree at k = 2: " << a << " vs " << b;
            throw numeric_error(msg.str());
        }
        r.value = a;
        r.branch = "power_small_k";
    }
    return r;
}

bound_report bound_from_models(const model& p1, const model& p0, const loss_fn& loss,
                               double delta_budget, const bound_options& opt) {
    affinity_result aff;
    switch (opt.affinity) {
        case affinity_choice::automatic: aff = affinity_auto(p1, p0); break;
        case affinity_choice::closed_form: aff = affinity_gaussian(p1, p0); break;
        case affinity_choice::quadrature: aff = affinity_quadrature(p1, p0); break;
        case affinity_choice::monte_carlo:
            aff = affinity_monte_carlo(p1, p0, opt.mc_count, opt.mc_seed);
            break;
    }
    double distance = std::abs(p1.parameter() - p0.parameter());
    if (loss.is_power()) return bound_power(loss, distance, delta_budget, aff);
    if (loss.cls() == loss_class::convex) {
        return bound_convex(loss, distance, delta_budget, aff);
    }
    return bound_generic(loss, distance, delta_budget, aff);
}

}  // namespace cri
