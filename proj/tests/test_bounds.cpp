#include <cmath>
#include <limits>

#include <doctest.h>

#include "cribound/bounds.hpp"
#include "cribound/errors.hpp"
#include "cribound/numeric.hpp"

namespace {

cri::affinity_result aff(double value) {
    cri::affinity_result a;
    a.value = value;
    a.method = cri::affinity_method::closed_form;
    return a;
}

cri::affinity_result aff_overflow() {
    cri::affinity_result a;
    a.value = std::numeric_limits<double>::infinity();
    a.overflow = true;
    return a;
}

}  // namespace

TEST_CASE("bound_convex evaluates the hinge-squared form") {
    // Delta = 2 l(d/2) = 1 at d = sqrt(2) for the squared loss, so
    // value = (1 - sqrt(0.1))^2.
    cri::bound_report b =
        cri::bound_convex(cri::parse_loss("sq"), std::sqrt(2.0), 0.1, aff(1.0));
    CHECK(b.value == doctest::Approx(0.46754446796632404).epsilon(1e-14));
    CHECK(b.branch == "convex_thm1");
    CHECK(b.delta_budget == doctest::Approx(0.1));
    CHECK_FALSE(b.affinity_overflow);

    // The affinity multiplies the budget inside the square root.
    cri::bound_report b2 =
        cri::bound_convex(cri::parse_loss("sq"), std::sqrt(2.0), 0.05, aff(2.0));
    CHECK(b2.value == doctest::Approx(b.value).epsilon(1e-14));

    // Hinge clips to zero once the budget term dominates.
    cri::bound_report z = cri::bound_convex(cri::parse_loss("sq"), 0.1, 0.9, aff(1.0));
    CHECK(z.value == 0.0);
}

TEST_CASE("bound_generic drops the factor two in the separation") {
    // Threshold loss: Delta = l(d/2) = 1 once d/2 >= tau; with
    // affinity * budget = 10^{-1.5} the bound is (1 - 10^{-0.75})^2.
    cri::bound_report b = cri::bound_generic(cri::loss_fn::threshold(0.1), 0.4, 0.001,
                                             aff(31.622776601683793));
    CHECK(b.value == doctest::Approx(0.67596689459389923).epsilon(1e-14));
    CHECK(b.branch == "generic_cor1");
    CHECK(b.delta_sep == doctest::Approx(1.0));

    // Below the threshold the separation vanishes and so does the bound.
    cri::bound_report z = cri::bound_generic(cri::loss_fn::threshold(0.3), 0.4, 0.001,
                                             aff(31.622776601683793));
    CHECK(z.value == 0.0);

    // For a convex loss, the generic route is valid but weaker.
    cri::bound_report strong =
        cri::bound_convex(cri::parse_loss("sq"), std::sqrt(2.0), 0.1, aff(1.0));
    cri::bound_report weak =
        cri::bound_generic(cri::parse_loss("sq"), std::sqrt(2.0), 0.1, aff(1.0));
    CHECK(weak.value < strong.value);
}

TEST_CASE("bound_power switches branches at k = 2") {
    // k = 2 exercises both branches, which must agree to roundoff:
    // (d^{k/2} - sqrt(a dk))^2 = (1 - sqrt(0.2))^2.
    cri::bound_report b = cri::bound_power(cri::parse_loss("sq"), 1.0, 0.2, aff(1.0));
    CHECK(b.value == doctest::Approx(0.30557280900008412).epsilon(1e-14));
    CHECK(b.branch == "power_small_k");
    REQUIRE(b.k.has_value());
    CHECK(*b.k == doctest::Approx(2.0));

    cri::bound_report b1 = cri::bound_power(cri::parse_loss("abs"), 1.0, 0.25, aff(1.0));
    CHECK(b1.value == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(b1.branch == "power_small_k");

    cri::bound_report b3 = cri::bound_power(cri::parse_loss("pow:3"), 1.0, 0.008, aff(1.0));
    // hinge(1 - sqrt(0.008^{2/3}))^3 = (1 - 0.2)^3
    CHECK(b3.value == doctest::Approx(0.512).epsilon(1e-12));
    CHECK(b3.branch == "power_large_k");

    CHECK_THROWS_AS(cri::bound_power(cri::loss_fn::threshold(0.1), 1.0, 0.1, aff(1.0)),
                    cri::invalid_input_error);
}

TEST_CASE("bounds reject ill-formed inputs") {
    cri::loss_fn sq = cri::parse_loss("sq");
    CHECK_THROWS_AS(cri::bound_convex(sq, -1.0, 0.1, aff(1.0)), cri::invalid_input_error);
    CHECK_THROWS_AS(cri::bound_convex(sq, 1.0, -0.1, aff(1.0)), cri::invalid_input_error);
    // A chi-squared affinity below one is impossible for probability pairs.
    CHECK_THROWS_AS(cri::bound_convex(sq, 1.0, 0.1, aff(0.5)), cri::invalid_input_error);
    // Sub-linear powers escape the convex route.
    CHECK_THROWS_AS(cri::bound_convex(cri::parse_loss("pow:0.5"), 1.0, 0.1, aff(1.0)),
                    cri::invalid_input_error);
    // But they are fine for the generic and power routes.
    CHECK_NOTHROW(cri::bound_generic(cri::parse_loss("pow:0.5"), 1.0, 0.01, aff(1.0)));
    CHECK_NOTHROW(cri::bound_power(cri::parse_loss("pow:0.5"), 1.0, 0.01, aff(1.0)));
}

TEST_CASE("an overflowed affinity yields the vacuous bound") {
    cri::bound_report b = cri::bound_convex(cri::parse_loss("sq"), 1.0, 0.1, aff_overflow());
    CHECK(b.value == 0.0);
    CHECK(b.affinity_overflow);
    CHECK(std::isinf(b.affinity));
    cri::bound_report bp = cri::bound_power(cri::parse_loss("sq"), 1.0, 0.1, aff_overflow());
    CHECK(bp.value == 0.0);
}

TEST_CASE("bound_from_models wires distance, affinity, and dispatch together") {
    cri::model p0 = cri::model::gaussian(0.0, 1.0).product(25);
    cri::model p1 = cri::model::gaussian(0.3, 1.0).product(25);

    // Power loss routes through the moment branch with d = 0.3.
    cri::bound_report b = cri::bound_from_models(p1, p0, cri::parse_loss("sq"), 0.01);
    CHECK(b.branch == "power_small_k");
    CHECK(b.affinity == doctest::Approx(std::exp(25.0 * 0.09)).epsilon(1e-12));
    double expect =
        cri::sq(cri::hinge(0.3 - std::sqrt(std::exp(25.0 * 0.09) * 0.01)));
    CHECK(b.value == doctest::Approx(expect).epsilon(1e-12));

    // Generic loss routes through the weak separation.
    cri::bound_report g =
        cri::bound_from_models(p1, p0, cri::loss_fn::threshold(0.1), 0.01);
    CHECK(g.branch == "generic_cor1");

    // A declared-convex non-power loss routes through the strong separation.
    cri::loss_fn cvx = cri::loss_fn::custom(
        "huber", cri::loss_class::convex,
        [](double x) { return x <= 1.0 ? 0.5 * x * x : x - 0.5; });
    CHECK(cri::bound_from_models(p1, p0, cvx, 0.01).branch == "convex_thm1");
}

TEST_CASE("bound_from_models on a discrete pair matches the by-hand affinity") {
    // Two atoms at 0 and 1; p0 = (1/2, 1/2), p1 = (1/4, 3/4). The affinity is
    // (1/4)^2/(1/2) + (3/4)^2/(1/2) = 1.25.
    cri::model p0 = cri::model::discrete({0.0, 1.0}, {0.5, 0.5}).with_parameter(0.0);
    cri::model p1 = cri::model::discrete({0.0, 1.0}, {0.25, 0.75}).with_parameter(1.0);

    cri::bound_options opt;
    opt.affinity = cri::affinity_choice::quadrature;
    cri::bound_report b =
        cri::bound_from_models(p1, p0, cri::parse_loss("sq"), 0.05, opt);
    CHECK(b.affinity == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(b.branch == "power_small_k");
    // Moment route at k = 2: (1 - sqrt(1.25 * 0.05))^2.
    CHECK(b.value == doctest::Approx(0.5625).epsilon(1e-13));

    // The convex route on the same instance gives the two-point form
    // (sqrt(2 (1/2)^2) - sqrt(1.25 * 0.05))^2.
    cri::affinity_result a;
    a.value = 1.25;
    cri::bound_report c = cri::bound_convex(cri::parse_loss("sq"), 1.0, 0.05, a);
    CHECK(c.value == doctest::Approx(0.20894660940672624).epsilon(1e-13));
}

TEST_CASE("hinge is the positive part") {
    CHECK(cri::hinge(1.5) == 1.5);
    CHECK(cri::hinge(0.0) == 0.0);
    CHECK(cri::hinge(-2.0) == 0.0);
}
