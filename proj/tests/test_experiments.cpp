#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "cribound/errors.hpp"
#include "cribound/experiments.hpp"
#include "cribound/numeric.hpp"

namespace {

const cri::check_row* find_check(const cri::experiment_report& report, const std::string& name) {
    for (const cri::check_row& check : report.checks) {
        if (check.name == name) return &check;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("parse_delta_rule handles both rule families") {
    cri::delta_rule pow = cri::parse_delta_rule("pow:0.5");
    CHECK(pow(100.0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(pow.spec() == "pow:0.5");

    cri::delta_rule cst = cri::parse_delta_rule("const:0.25");
    CHECK(cst(7.0) == doctest::Approx(0.25));
    CHECK(cst(7000.0) == doctest::Approx(0.25));
    CHECK(cst.spec() == "const:0.25");

    CHECK_THROWS_AS(cri::parse_delta_rule("pow:0"), cri::config_error);
    CHECK_THROWS_AS(cri::parse_delta_rule("pow:-1"), cri::config_error);
    CHECK_THROWS_AS(cri::parse_delta_rule("const:0"), cri::config_error);
    CHECK_THROWS_AS(cri::parse_delta_rule("const:1"), cri::config_error);
    CHECK_THROWS_AS(cri::parse_delta_rule("const:2"), cri::config_error);
    CHECK_THROWS_AS(cri::parse_delta_rule("lin:1"), cri::config_error);
    CHECK_THROWS_AS(cri::parse_delta_rule(""), cri::config_error);
}

TEST_CASE("parse_config fills defaults and rejects unknown keys") {
    nlohmann::json doc = {{"experiment", "prop2"}, {"n_grid", {100, 200}}, {"seed", 5}};
    cri::experiment_config cfg = cri::parse_config(doc);
    CHECK(cfg.experiment == cri::experiment_kind::prop2);
    REQUIRE(cfg.n_grid.size() == 2);
    CHECK(cfg.n_grid[1] == 200);
    CHECK(cfg.seed == 5);
    CHECK(cfg.c == doctest::Approx(0.5));
    CHECK(cfg.delta == "pow:1");
    CHECK(cfg.reps == 10000);

    nlohmann::json bad = {{"experiment", "prop2"}, {"bogus", 1}};
    CHECK_THROWS_AS(cri::parse_config(bad), cri::config_error);
    nlohmann::json mistyped = {{"experiment", "prop2"}, {"n_grid", "ten"}};
    CHECK_THROWS_AS(cri::parse_config(mistyped), cri::config_error);

    CHECK(cri::parse_experiment("mean") == cri::experiment_kind::mean_corollary);
    CHECK(cri::parse_experiment("discussion_abs") == cri::experiment_kind::discussion_abs);
    CHECK_THROWS_AS(cri::parse_experiment("prop9"), cri::config_error);
}

TEST_CASE("validate_config enforces the documented ranges") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop1;
    cfg.n_grid = {10000};
    cfg.reps = 100;
    CHECK_NOTHROW(cri::validate_config(cfg));

    auto expect_reject = [](cri::experiment_config broken) {
        CHECK_THROWS_AS(cri::validate_config(broken), cri::config_error);
    };
    cri::experiment_config c1 = cfg;
    c1.n_grid = {};
    expect_reject(c1);
    cri::experiment_config c2 = cfg;
    c2.n_grid = {200, 100};
    expect_reject(c2);
    cri::experiment_config c3 = cfg;
    c3.reps = 99;
    expect_reject(c3);
    cri::experiment_config c4 = cfg;
    c4.grid_points = 0;
    expect_reject(c4);
    cri::experiment_config c5 = cfg;
    c5.c = 1.0;
    expect_reject(c5);
    cri::experiment_config c6 = cfg;
    c6.experiment = cri::experiment_kind::prop2;
    c6.epsilon = 0.02;  // closed-form route is only quoted up to 0.01
    expect_reject(c6);
    cri::experiment_config c7 = cfg;
    c7.experiment = cri::experiment_kind::prop2;
    c7.sigma2 = 2.0;
    expect_reject(c7);
    cri::experiment_config c8 = cfg;
    c8.experiment = cri::experiment_kind::prop3;
    c8.B = 2.0;
    expect_reject(c8);
    cri::experiment_config c9 = cfg;
    c9.experiment = cri::experiment_kind::discussion_abs;
    c9.c0 = 0.5;
    c9.c1 = 0.1;
    expect_reject(c9);
}

TEST_CASE("prop1 rows follow the analytic window bound") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop1;
    cfg.n_grid = {10000};
    cfg.delta = "pow:1";
    cfg.c = 0.5;
    cfg.grid_points = 4;
    cfg.reps = 500;
    cfg.seed = 0;
    cri::experiment_report rep = cri::run_prop1(cfg);

    REQUIRE(rep.rows.size() == 4);
    REQUIRE(rep.per_n.size() == 1);
    CHECK(rep.per_n[0].delta_n == doctest::Approx(1e-4).epsilon(1e-15));

    // Lower edge theta = 2/sqrt(n): affinity e^4, bound (1 - sqrt(e^4 delta))^2.
    const double lo_bound = cri::sq(1.0 - std::sqrt(std::exp(4.0) * 1e-4));
    CHECK(rep.rows[0].bound == doctest::Approx(lo_bound).epsilon(1e-12));
    CHECK(rep.rows[0].affinity == doctest::Approx(std::exp(4.0)).epsilon(1e-12));

    // Upper edge theta = sqrt(c log(1/delta)/n): the bound collapses to
    // (1 - delta^{(1-c)/2})^2 = 0.81 and is the window infimum.
    CHECK(rep.rows[3].bound == doctest::Approx(0.81).epsilon(1e-12));
    CHECK(rep.per_n[0].inf_bound == doctest::Approx(0.81).epsilon(1e-12));

    // Rows are simulated and none undercuts its certified bound.
    for (const cri::experiment_row& row : rep.rows) {
        REQUIRE(row.emp_risk.has_value());
        CHECK(*row.emp_risk + 4.0 * *row.emp_se >= row.bound);
    }
    CHECK(rep.row_invariant_failures == 0);

    const cri::check_row* budget = find_check(rep, "hodges_budget_within_delta[n=10000]");
    REQUIRE(budget != nullptr);
    CHECK(budget->ok);
    CHECK(rep.invariant_ok);
}

TEST_CASE("prop1 rejects windows that cannot hold any theta") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop1;
    cfg.n_grid = {400};  // c log(1/delta_n) = 0.5 log 400 < 4
    cfg.delta = "pow:1";
    cfg.c = 0.5;
    cfg.reps = 100;
    CHECK_THROWS_AS(cri::run_prop1(cfg), cri::config_error);

    // A delta rule that leaves (0,1) is rejected before any window logic.
    cri::experiment_config one = cfg;
    one.n_grid = {1};
    CHECK_THROWS_AS(cri::run_prop1(one), cri::config_error);
}

// The analytic infimum over the theta window equals (1 - delta_n^{(1-c)/2})^2,
// which for delta_n = 1e-6 and c = 1/2 is (1 - 10^{-1.5})^2 = 0.93782. The
// assertion below records the strict > 0.99 claim as stated; it fails, and is
// expected to keep failing, because 0.93782 < 0.99 at every n once delta_n is
// pinned at 1e-6.
TEST_CASE("prop1 window infimum exceeds 0.99 at delta_n = 1e-6, c = 0.5") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop1;
    cfg.n_grid = {100};
    cfg.delta = "const:0.000001";
    cfg.c = 0.5;
    cfg.grid_points = 3;
    cfg.reps = 200;
    cri::experiment_report rep = cri::run_prop1(cfg);
    const cri::check_row* check = find_check(rep, "inf_bound_above_0.99[n=100]");
    REQUIRE(check != nullptr);
    CHECK(check->lhs == doctest::Approx(cri::sq(1.0 - std::pow(10.0, -1.5))).epsilon(1e-12));
    CHECK(check->ok);
}

TEST_CASE("prop2 reproduces the closed-form bound and quarter-rate floor") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop2;
    cfg.n_grid = {100};
    cfg.alpha = 0.125;
    cfg.epsilon = 0.01;
    cfg.seed = 1;
    cri::experiment_report rep = cri::run_prop2(cfg);

    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].affinity == doctest::Approx(1.7782794100389228).epsilon(1e-14));
    CHECK(rep.rows[0].bound == doctest::Approx(0.054418581575110744).epsilon(1e-13));
    CHECK(rep.rows[0].param == doctest::Approx(std::sqrt(0.125 * std::log(100.0) / 100.0))
                                   .epsilon(1e-13));
    CHECK_FALSE(rep.rows[0].emp_risk.has_value());

    const cri::check_row* quarter = find_check(rep, "bound_exceeds_quarter_rate[n=100]");
    REQUIRE(quarter != nullptr);
    CHECK(quarter->ok);
    CHECK(quarter->rhs == doctest::Approx(0.053649150657233681).epsilon(1e-13));

    const cri::check_row* quartic = find_check(rep, "quartic_root_inequality_on_eps_grid");
    REQUIRE(quartic != nullptr);
    CHECK(quartic->ok);
    CHECK(quartic->lhs > 0.0);

    CHECK(rep.invariant_ok);
    CHECK(rep.row_invariant_failures == 0);
    CHECK_FALSE(rep.empirical_constant.has_value());
}

TEST_CASE("prop2 at alpha = 0 pins the bound to zero") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop2;
    cfg.n_grid = {100};
    cfg.alpha = 0.0;
    cri::experiment_report rep = cri::run_prop2(cfg);
    CHECK(rep.rows[0].bound == 0.0);
    const cri::check_row* zero = find_check(rep, "bound_zero_at_alpha_zero[n=100]");
    REQUIRE(zero != nullptr);
    CHECK(zero->ok);
    CHECK(rep.invariant_ok);
}

TEST_CASE("prop3 reports the smallest feasible n when the window is empty") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop3;
    cfg.n_grid = {100};
    cfg.g_name = "id";
    cfg.B = 2.5;
    cfg.c = 0.5;
    cfg.delta = "pow:1";
    cfg.reps = 100;
    try {
        cri::run_prop3(cfg);
        FAIL("expected config_error");
    } catch (const cri::config_error& e) {
        // (KB/pairing)^2 = 6.25 needs c log n >= 6.25, so n >= e^{12.5}.
        CHECK(std::string(e.what()).find("minimal feasible n is 268338") != std::string::npos);
    }

    cri::experiment_config cst = cfg;
    cst.delta = "const:0.01";
    try {
        cri::run_prop3(cst);
        FAIL("expected config_error");
    } catch (const cri::config_error& e) {
        std::string what = e.what();
        CHECK(what.find("no n works under a constant delta rule") != std::string::npos);
        CHECK(what.find("3.72665e-06") != std::string::npos);
    }
}

TEST_CASE("prop3 simulated rows respect their bounds on a feasible window") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop3;
    cfg.n_grid = {200};
    cfg.g_name = "id";
    cfg.B = 2.1;
    cfg.c = 0.9;
    cfg.delta = "pow:1";
    cfg.reps = 300;
    cfg.grid_points = 4;
    cfg.seed = 0;
    cri::experiment_report rep = cri::run_prop3(cfg);

    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.per_n[0].inf_bound > 0.0);
    for (const cri::experiment_row& row : rep.rows) {
        REQUIRE(row.emp_risk.has_value());
        CHECK(row.affinity >= 1.0);
    }
    CHECK(rep.row_invariant_failures == 0);
    const cri::check_row* budget = find_check(rep, "hodges_budget_within_delta[n=200]");
    REQUIRE(budget != nullptr);
    CHECK(budget->ok);
}

TEST_CASE("mean_corollary rejects directions orthogonal to the mean influence") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::mean_corollary;
    cfg.n_grid = {64};
    cfg.g_name = "hermite2";
    cfg.B = 2.1;
    cfg.c = 0.9;
    cfg.reps = 100;
    try {
        cri::run_mean_corollary(cfg);
        FAIL("expected config_error");
    } catch (const cri::config_error& e) {
        std::string what = e.what();
        CHECK(what.find("hermite2") != std::string::npos);
        CHECK(what.find("not admissible") != std::string::npos);
    }
}

TEST_CASE("mean_corollary runs the mixed direction end to end") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::mean_corollary;
    cfg.n_grid = {64};
    cfg.g_name = "mix";
    cfg.B = 2.1;
    cfg.c = 0.9;
    cfg.loss_threshold = 0.5;
    cfg.delta = "pow:1";
    cfg.reps = 200;
    cfg.grid_points = 3;
    cri::experiment_report rep = cri::run_mean_corollary(cfg);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.row_invariant_failures == 0);
    for (const cri::experiment_row& row : rep.rows) CHECK(row.bound >= 0.0);
}

TEST_CASE("discussion_abs extracts a positive normalized constant") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::discussion_abs;
    cfg.n_grid = {10000};
    cfg.g_name = "id";
    cfg.delta = "const:0.001";
    cfg.c0 = 0.1;
    cfg.c1 = 0.5;
    cfg.reps = 300;
    cfg.grid_points = 10;
    cfg.seed = 0;
    cri::experiment_report rep = cri::run_discussion_abs(cfg);

    REQUIRE(rep.rows.size() == 10);
    REQUIRE(rep.empirical_constant.has_value());
    // The normalized infimum is analytic (no Monte Carlo enters the bound).
    CHECK(*rep.empirical_constant == doctest::Approx(0.0505526).epsilon(1e-5));
    CHECK(rep.per_n[0].normalized_inf == doctest::Approx(*rep.empirical_constant));

    const cri::check_row* budget = find_check(rep, "hodges_budget_within_budget[n=10000]");
    REQUIRE(budget != nullptr);
    CHECK(budget->ok);
    // Budget scale sqrt(delta_n/n) = sqrt(1e-7).
    CHECK(budget->rhs == doctest::Approx(std::sqrt(1e-7)).epsilon(1e-12));

    const cri::check_row* positive = find_check(rep, "empirical_constant_positive");
    REQUIRE(positive != nullptr);
    CHECK(positive->ok);
    CHECK(rep.invariant_ok);
    CHECK(rep.row_invariant_failures == 0);
}

TEST_CASE("degenerate windows collapse to a single grid point") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::discussion_abs;
    cfg.n_grid = {10000};
    cfg.g_name = "id";
    cfg.delta = "const:0.001";
    cfg.c0 = 0.25;
    cfg.c1 = 0.25;  // t_lo == t_hi
    cfg.reps = 100;
    cfg.grid_points = 8;
    cri::experiment_report rep = cri::run_discussion_abs(cfg);
    CHECK(rep.rows.size() == 1);
}

TEST_CASE("report_to_json is deterministic and typed as documented") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop2;
    cfg.n_grid = {100};
    cfg.alpha = 0.125;
    cfg.seed = 1;
    cri::experiment_report rep1 = cri::run_prop2(cfg);
    cri::experiment_report rep2 = cri::run_prop2(cfg);

    nlohmann::ordered_json j1 = cri::report_to_json(rep1);
    nlohmann::ordered_json j2 = cri::report_to_json(rep2);
    CHECK(j1.dump() == j2.dump());

    CHECK(j1.at("experiment") == "prop2");
    CHECK(j1.at("config").at("experiment") == "prop2");
    CHECK(j1.at("config").at("n_grid").at(0) == 100);
    CHECK(j1.at("rows").size() == 1);
    CHECK(j1.at("rows").at(0).at("emp_risk").is_null());
    CHECK(j1.at("per_n").at(0).at("n") == 100);
    CHECK(j1.at("invariant_ok") == true);
    CHECK(j1.at("row_invariant_failures") == 0);
    CHECK(j1.at("empirical_constant").is_null());
}

TEST_CASE("write_report_csv emits one line per row with empty optional cells") {
    cri::experiment_config cfg;
    cfg.experiment = cri::experiment_kind::prop2;
    cfg.n_grid = {100};
    cfg.alpha = 0.125;
    cri::experiment_report rep = cri::run_prop2(cfg);

    std::ostringstream out;
    cri::write_report_csv(rep, out);
    std::istringstream in(out.str());
    std::string header, row, extra;
    REQUIRE(std::getline(in, header));
    CHECK(header == "n,param,affinity,delta_sep,bound,emp_risk,emp_se,seed");
    REQUIRE(std::getline(in, row));
    CHECK(row.rfind("100,", 0) == 0);
    CHECK(row.find(",,") != std::string::npos);
    CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("run_experiment dispatches on the configured kind") {
    cri::experiment_config cfg;
    cfg.experiment = cri::parse_experiment("prop2");
    cfg.n_grid = {100};
    cri::experiment_report rep = cri::run_experiment(cfg);
    CHECK(rep.experiment == cri::experiment_kind::prop2);
    CHECK(cri::to_string(rep.experiment) == "prop2");
    CHECK(cri::to_string(cri::experiment_kind::mean_corollary) == "mean_corollary");
}
