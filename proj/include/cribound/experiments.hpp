#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cribound/model.hpp"

namespace cri {

enum class experiment_kind { prop1, prop2, prop3, mean_corollary, discussion_abs };

std::string to_string(experiment_kind kind);
// Accepts both the canonical names and the CLI short forms
// (mean -> mean_corollary, discussion -> discussion_abs).
experiment_kind parse_experiment(const std::string& name);

// Budget sequence delta_n: "pow:<a>" meaning n^{-a}, or "const:<v>".
struct delta_rule {
    enum class kind_t { power, constant };
    kind_t kind = kind_t::power;
    double value = 1.0;

    double operator()(double n) const;
    std::string spec() const;
};
delta_rule parse_delta_rule(const std::string& spec);

// One configuration drives one experiment. Fields irrelevant to the chosen
// experiment keep their defaults and are echoed into the report so that a
// report fully describes its run.
struct experiment_config {
    experiment_kind experiment = experiment_kind::prop1;
    std::vector<std::int64_t> n_grid = {10000};
    std::string delta = "pow:1";      // delta_n rule
    double c = 0.5;                   // window scale, in (0,1)
    double alpha = 0.125;             // exponent in theta^2 = alpha log(1/eps)/n
    double epsilon = 0.01;            // budget scale eps/sqrt(n)
    double sigma2 = 1.0;              // gaussian base variance
    std::string g_name = "id";        // perturbation direction
    double B = 2.5;                   // lower-edge constant of the t window, > 2
    double c0 = 0.1;                  // t^2 window [c0, c1] * log(1/delta_n)/n
    double c1 = 0.5;
    std::int64_t reps = 10000;        // Monte Carlo replications per cell
    std::uint64_t seed = 0;
    std::int64_t grid_points = 20;    // parameter points per window
    double loss_threshold = 1.0;      // K in thresh(K/sqrt(n))
    double phi_smoothness = default_phi_smoothness;
    std::string output_path;          // optional default for the CLI --out
};

// Strict parse: unknown keys are config errors, as are values of the wrong
// shape. `experiment` may be omitted when the caller sets it separately.
experiment_config parse_config(const nlohmann::json& doc);
experiment_config load_config(const std::string& path);
void validate_config(const experiment_config& cfg);

// One (n, parameter) cell: the affinity, the separation entering the bound,
// the analytic lower bound, and (for simulated experiments) the empirical
// risk with its standard error. `seed` is the cell's derived seed.
struct experiment_row {
    std::int64_t n = 0;
    double param = 0.0;
    double affinity = 1.0;
    double delta_sep = 0.0;
    double bound = 0.0;
    std::optional<double> emp_risk;
    std::optional<double> emp_se;
    std::uint64_t seed = 0;
};

struct per_n_summary {
    std::int64_t n = 0;
    double delta_n = 0.0;
    double inf_bound = 0.0;              // infimum of bound over the window grid
    std::optional<double> emp_budget;    // estimator's empirical risk at P0
    std::optional<double> emp_budget_se;
    std::optional<double> normalized_inf;  // discussion_abs only
};

// A named comparison evaluated during the run; ok records lhs >= rhs (or the
// check-specific predicate described by the name).
struct check_row {
    std::string name;
    bool ok = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct experiment_report {
    experiment_kind experiment = experiment_kind::prop1;
    experiment_config config;
    std::vector<experiment_row> rows;
    std::vector<per_n_summary> per_n;
    std::vector<check_row> checks;
    std::int64_t row_invariant_failures = 0;  // rows with emp + 4 se < bound
    bool invariant_ok = false;                // all checks pass and no row fails
    std::optional<double> empirical_constant;  // discussion_abs: inf of normalized bound
};

// Threshold-loss risk window: for each n, a grid of means theta with
// 2 sigma/sqrt(n) <= theta <= sigma sqrt(c log(1/delta_n))/sqrt(n); analytic
// bound against budget delta_n, empirical risk of the thresholded mean.
// Errors with a config error naming the failing n when the window is empty.
experiment_report run_prop1(const experiment_config& cfg);

// Analytic-only: theta^2 = alpha log(1/eps)/n against budget eps/sqrt(n)
// under absolute loss; cross-checks the closed form, the quarter-constant
// floor at alpha = 1/8, and the quartic-root inequality on a 50-point eps
// grid.
experiment_report run_prop2(const experiment_config& cfg);

// Tilted-family risk window: for each n, a grid of t with
// B^2 K^2/(n pairing^2) <= t^2 <= c log(1/delta_n)/n; tilted model built per
// cell, affinity by quadrature + tensorization, threshold-loss bound and
// empirical risk of the thresholded mean. Errors with the minimal feasible n
// when the window is empty.
experiment_report run_prop3(const experiment_config& cfg);

// run_prop3 for the mean functional with the identity influence; kept as a
// separate entry point (and report label) for the CLI.
experiment_report run_mean_corollary(const experiment_config& cfg);

// Absolute-loss analogue over t^2 in [c0, c1] log(1/delta_n)/n with budget
// sqrt(delta_n/n); reports the bound normalized by
// |pairing| sqrt(log(1/delta_n)/n) and its infimum (the empirical constant).
experiment_report run_discussion_abs(const experiment_config& cfg);

experiment_report run_experiment(const experiment_config& cfg);

// Deterministic JSON form: field order fixed, no timestamps, so identical
// config + seed reproduces the bytes.
nlohmann::ordered_json report_to_json(const experiment_report& report);

// CSV columns: n,param,affinity,delta_sep,bound,emp_risk,emp_se,seed.
// Optional cells are left empty.
void write_report_csv(const experiment_report& report, std::ostream& out);

}  // namespace cri
