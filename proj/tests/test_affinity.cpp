#include <cmath>
#include <vector>

#include <doctest.h>

#include "cribound/affinity.hpp"
#include "cribound/errors.hpp"

TEST_CASE("gaussian affinity has the exponential closed form") {
    cri::model p0 = cri::model::gaussian(0.0, 1.0);
    cri::model p1 = cri::model::gaussian(0.5, 1.0);
    cri::affinity_result a = cri::affinity_gaussian(p1, p0);
    CHECK(a.method == cri::affinity_method::closed_form);
    CHECK(a.value == doctest::Approx(std::exp(0.25)).epsilon(1e-15));
    CHECK_FALSE(a.overflow);

    // n-fold products multiply the exponent by n.
    cri::affinity_result an =
        cri::affinity_gaussian(cri::model::gaussian(0.1, 1.0).product(50), p0.product(50));
    CHECK(an.value == doctest::Approx(std::exp(0.5)).epsilon(1e-15));

    // Scaling by the variance.
    cri::affinity_result av =
        cri::affinity_gaussian(cri::model::gaussian(0.5, 2.0), cri::model::gaussian(0.0, 2.0));
    CHECK(av.value == doctest::Approx(std::exp(0.125)).epsilon(1e-15));
}

TEST_CASE("gaussian affinity rejects mismatched pairs") {
    cri::model p0 = cri::model::gaussian(0.0, 1.0);
    CHECK_THROWS_AS(cri::affinity_gaussian(cri::model::gaussian(0.1, 2.0), p0),
                    cri::invalid_input_error);
    CHECK_THROWS_AS(cri::affinity_gaussian(cri::model::gaussian(0.1, 1.0).product(2), p0),
                    cri::invalid_input_error);
    CHECK_THROWS_AS(
        cri::affinity_gaussian(cri::model::discrete({0.0, 1.0}, {0.5, 0.5}), p0),
        cri::invalid_input_error);
}

TEST_CASE("gaussian affinity overflows to a flagged infinity") {
    cri::model p0 = cri::model::gaussian(0.0, 1.0).product(1000);
    cri::model p1 = cri::model::gaussian(1.0, 1.0).product(1000);
    cri::affinity_result a = cri::affinity_gaussian(p1, p0);
    CHECK(a.overflow);
    CHECK(std::isinf(a.value));
}

TEST_CASE("affinity_product tensorizes a marginal value") {
    cri::affinity_result marginal;
    marginal.value = std::exp(0.01);
    marginal.method = cri::affinity_method::quadrature;
    marginal.error_estimate = 1e-12;
    cri::affinity_result a = cri::affinity_product(marginal, 100);
    CHECK(a.method == cri::affinity_method::tensorized);
    CHECK(a.value == doctest::Approx(std::exp(1.0)).epsilon(1e-13));

    // Relative error grows linearly in n.
    CHECK(a.error_estimate == doctest::Approx(std::exp(1.0) * 100.0 * (1e-12 / std::exp(0.01)))
                                  .epsilon(1e-6));

    // A power that exceeds the double range overflows loudly.
    cri::affinity_result big;
    big.value = 3.0;
    cri::affinity_result over = cri::affinity_product(big, 2000);
    CHECK(over.overflow);
    CHECK(std::isinf(over.value));

    cri::affinity_result sub;
    sub.value = 0.5;
    CHECK_THROWS_AS(cri::affinity_product(sub, 3), cri::invalid_input_error);
}

TEST_CASE("quadrature affinity agrees with the gaussian closed form") {
    cri::model p0 = cri::model::gaussian(0.0, 1.0);
    cri::model p1 = cri::model::gaussian(0.3, 1.0);
    cri::affinity_result q = cri::affinity_quadrature(p1, p0);
    CHECK(q.method == cri::affinity_method::quadrature);
    CHECK(q.value == doctest::Approx(std::exp(0.09)).epsilon(1e-12));

    // Product pairs tensorize the marginal quadrature.
    cri::affinity_result qn = cri::affinity_quadrature(p1.product(20), p0.product(20));
    CHECK(qn.method == cri::affinity_method::tensorized);
    CHECK(qn.value == doctest::Approx(std::exp(1.8)).epsilon(1e-11));
}

TEST_CASE("quadrature affinity detects divergent tails") {
    // Numerator with the heavier tail: the ratio integrand grows without
    // bound, which surfaces as a boundary-decay failure.
    cri::model p0 = cri::model::gaussian(0.0, 1.0);
    cri::model p1 = cri::model::gaussian(0.0, 3.0);
    CHECK_THROWS_AS(cri::affinity_quadrature(p1, p0), cri::numeric_error);
}

TEST_CASE("discrete affinity sums exactly and enforces shared support") {
    cri::model p0 = cri::model::discrete({0.0, 1.0, 2.0}, {0.5, 0.25, 0.25});
    cri::model p1 = cri::model::discrete({0.0, 1.0, 2.0}, {0.25, 0.5, 0.25});
    cri::affinity_result a = cri::affinity_quadrature(p1, p0);
    // 0.25^2/0.5 + 0.5^2/0.25 + 0.25^2/0.25 = 0.125 + 1 + 0.25
    CHECK(a.value == doctest::Approx(1.375).epsilon(1e-15));
    CHECK(a.error_estimate == 0.0);

    cri::model other = cri::model::discrete({0.0, 1.0, 2.5}, {0.25, 0.5, 0.25});
    CHECK_THROWS_AS(cri::affinity_quadrature(other, p0), cri::invalid_input_error);

    // Mass of p1 on an atom p0 excludes.
    cri::model q0 = cri::model::discrete({0.0, 1.0}, {1.0, 0.0});
    cri::model q1 = cri::model::discrete({0.0, 1.0}, {0.5, 0.5});
    CHECK_THROWS_AS(cri::affinity_quadrature(q1, q0), cri::absolute_continuity_error);

    // Mixing a discrete with a continuous marginal has no density ratio.
    CHECK_THROWS_AS(cri::affinity_quadrature(cri::model::gaussian(0.0, 1.0), p0),
                    cri::invalid_input_error);
}

TEST_CASE("monte carlo affinity brackets the truth and is reproducible") {
    cri::model p0 = cri::model::gaussian(0.0, 1.0);
    cri::model p1 = cri::model::gaussian(0.2, 1.0);
    cri::affinity_result a = cri::affinity_monte_carlo(p1, p0, 400000, 17);
    CHECK(a.method == cri::affinity_method::monte_carlo);
    CHECK(a.error_estimate > 0.0);
    CHECK(std::abs(a.value - std::exp(0.04)) < 4.0 * a.error_estimate);

    cri::affinity_result b = cri::affinity_monte_carlo(p1, p0, 400000, 17);
    CHECK(a.value == b.value);
    cri::affinity_result c = cri::affinity_monte_carlo(p1, p0, 400000, 18);
    CHECK(a.value != c.value);

    CHECK_THROWS_AS(cri::affinity_monte_carlo(p1, p0, 1, 17), cri::invalid_input_error);
}

TEST_CASE("affinity_auto picks the closed form exactly when it applies") {
    cri::model p0 = cri::model::gaussian(0.0, 1.0).product(10);
    cri::model p1 = cri::model::gaussian(0.1, 1.0).product(10);
    CHECK(cri::affinity_auto(p1, p0).method == cri::affinity_method::closed_form);

    cri::model w = cri::model::gaussian(0.1, 1.5).product(10);
    cri::affinity_result viaq = cri::affinity_auto(w, p0);
    CHECK(viaq.method == cri::affinity_method::tensorized);

    cri::model t1 = cri::model::tilted(cri::model::gaussian(0.0, 1.0),
                                       cri::builtin_score("id"), 0.2);
    CHECK(cri::affinity_auto(t1, cri::model::gaussian(0.0, 1.0)).method ==
          cri::affinity_method::quadrature);
}

TEST_CASE("verify_lemma_tilt shows the quadratic divergence rate for id") {
    cri::model base = cri::model::gaussian(0.0, 1.0);
    cri::lemma_tilt_report rep =
        cri::verify_lemma_tilt(base, cri::builtin_score("id"), {0.4, 0.2, 0.1, 0.05});
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.second_moment == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.ratio_trend_monotone);
    CHECK(rep.all_c_t_ok);
    // chi2/t^2 converges onto E0[g^2] = 1 from below; at t = 0.05 it must sit
    // within 10%.
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].ratio > rep.rows[i - 1].ratio);
    }
    CHECK(std::abs(rep.rows.back().ratio - 1.0) < 0.1);
    CHECK(rep.rows.back().chi2 ==
          doctest::Approx(rep.rows.back().ratio * 0.05 * 0.05).epsilon(1e-12));
}

TEST_CASE("verify_lemma_tilt reproduces frozen hermite2 ratios") {
    cri::model base = cri::model::gaussian(0.0, 1.0);
    cri::lemma_tilt_report rep =
        cri::verify_lemma_tilt(base, cri::builtin_score("hermite2"), {0.2, 0.1, 0.05});
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].ratio == doctest::Approx(0.789335700125).epsilon(1e-9));
    CHECK(rep.rows[1].ratio == doctest::Approx(0.921298147245).epsilon(1e-9));
    CHECK(rep.rows[2].ratio == doctest::Approx(0.976807751939).epsilon(1e-9));
    CHECK(rep.ratio_trend_monotone);
    CHECK(rep.all_c_t_ok);
}

TEST_CASE("verify_lemma_tilt insists on a decreasing positive grid") {
    cri::model base = cri::model::gaussian(0.0, 1.0);
    cri::score id = cri::builtin_score("id");
    CHECK_THROWS_AS(cri::verify_lemma_tilt(base, id, {}), cri::invalid_input_error);
    CHECK_THROWS_AS(cri::verify_lemma_tilt(base, id, {0.1, 0.2}), cri::invalid_input_error);
    CHECK_THROWS_AS(cri::verify_lemma_tilt(base, id, {0.2, 0.0}), cri::invalid_input_error);
}
