#include "cribound/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cribound/bounds.hpp"
#include "cribound/mc_sim.hpp"
#include "cribound/numeric.hpp"
#include "cribound/rng.hpp"

namespace cri {
namespace {

std::string num(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

// Hands out per-cell seeds in deterministic emission order.
struct seed_stream {
    std::uint64_t master;
    std::uint64_t counter = 0;
    std::uint64_t next() { return derive_seed(master, counter++); }
};

// Window grid: log-spaced points, collapsed to a single point when the
// window is degenerate.
std::vector<double> window_grid(double lo, double hi, std::int64_t points) {
    if (hi <= lo * (1.0 + 1e-12)) return {lo};
    return log_spaced(lo, hi, static_cast<std::size_t>(points));
}

void push_check(experiment_report& report, std::string name, bool ok, double lhs, double rhs) {
    report.checks.push_back(check_row{std::move(name), ok, lhs, rhs});
}

// Row invariant: simulated risk can undershoot the certified bound only by
// Monte Carlo noise, allowed up to 4 standard errors.
void finalize(experiment_report& report) {
    report.row_invariant_failures = 0;
    for (const experiment_row& row : report.rows) {
        if (!row.emp_risk) continue;
        if (*row.emp_risk + 4.0 * *row.emp_se < row.bound) ++report.row_invariant_failures;
    }
    push_check(report, "rows_emp_risk_plus_4se_ge_bound", report.row_invariant_failures == 0,
               static_cast<double>(report.row_invariant_failures), 0.0);
    report.invariant_ok = true;
    for (const check_row& check : report.checks) {
        report.invariant_ok = report.invariant_ok && check.ok;
    }
}

void check_inf_bound_trend(experiment_report& report) {
    for (std::size_t i = 1; i < report.per_n.size(); ++i) {
        std::ostringstream name;
        name << "inf_bound_non_decreasing[n=" << report.per_n[i - 1].n << "->"
             << report.per_n[i].n << "]";
        push_check(report, name.str(),
                   report.per_n[i].inf_bound >= report.per_n[i - 1].inf_bound - 1e-12,
                   report.per_n[i].inf_bound, report.per_n[i - 1].inf_bound);
    }
}

double delta_n_checked(const delta_rule& rule, std::int64_t n) {
    double d = rule(static_cast<double>(n));
    if (!(d > 0.0) || !(d < 1.0)) {
        throw config_error("delta rule gives delta_n = " + num(d) + " at n = " +
                           std::to_string(n) + "; need 0 < delta_n < 1");
    }
    return d;
}

// Shared by prop3 and its mean-functional alias.
experiment_report run_tilt_window(const experiment_config& cfg, experiment_kind label);

}  // namespace

std::string to_string(experiment_kind kind) {
    switch (kind) {
        case experiment_kind::prop1: return "prop1";
        case experiment_kind::prop2: return "prop2";
        case experiment_kind::prop3: return "prop3";
        case experiment_kind::mean_corollary: return "mean_corollary";
        case experiment_kind::discussion_abs: return "discussion_abs";
    }
    return "unknown";
}

experiment_kind parse_experiment(const std::string& name) {
    if (name == "prop1") return experiment_kind::prop1;
    if (name == "prop2") return experiment_kind::prop2;
    if (name == "prop3") return experiment_kind::prop3;
    if (name == "mean" || name == "mean_corollary") return experiment_kind::mean_corollary;
    if (name == "discussion" || name == "discussion_abs") {
        return experiment_kind::discussion_abs;
    }
    throw config_error("unknown experiment '" + name +
                       "' (expected prop1, prop2, prop3, mean, discussion)");
}

double delta_rule::operator()(double n) const {
    return kind == kind_t::power ? std::pow(n, -value) : value;
}

std::string delta_rule::spec() const {
    return (kind == kind_t::power ? "pow:" : "const:") + num(value);
}

delta_rule parse_delta_rule(const std::string& spec) {
    auto parse_tail = [&](std::size_t offset) {
        const std::string text = spec.substr(offset);
        const char* begin = text.c_str();
        char* end = nullptr;
        double value = std::strtod(begin, &end);
        if (text.empty() || end != begin + text.size() || !std::isfinite(value)) {
            throw config_error("delta rule '" + spec + "': bad number '" + text + "'");
        }
        return value;
    };
    delta_rule rule;
    if (spec.rfind("pow:", 0) == 0) {
        rule.kind = delta_rule::kind_t::power;
        rule.value = parse_tail(4);
        if (!(rule.value > 0.0)) {
            throw config_error("delta rule '" + spec + "': exponent must be > 0");
        }
        return rule;
    }
    if (spec.rfind("const:", 0) == 0) {
        rule.kind = delta_rule::kind_t::constant;
        rule.value = parse_tail(6);
        if (!(rule.value > 0.0 && rule.value < 1.0)) {
            throw config_error("delta rule '" + spec + "': constant must be in (0,1)");
        }
        return rule;
    }
    throw config_error("unknown delta rule '" + spec + "' (expected pow:<a> or const:<v>)");
}

experiment_config parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw config_error("config must be a JSON object");
    experiment_config cfg;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "experiment") {
                cfg.experiment = parse_experiment(value.get<std::string>());
            } else if (key == "n_grid") {
                cfg.n_grid = value.get<std::vector<std::int64_t>>();
            } else if (key == "delta") {
                cfg.delta = value.get<std::string>();
            } else if (key == "c") {
                cfg.c = value.get<double>();
            } else if (key == "alpha") {
                cfg.alpha = value.get<double>();
            } else if (key == "epsilon") {
                cfg.epsilon = value.get<double>();
            } else if (key == "sigma2") {
                cfg.sigma2 = value.get<double>();
            } else if (key == "g_name") {
                cfg.g_name = value.get<std::string>();
            } else if (key == "B") {
                cfg.B = value.get<double>();
            } else if (key == "c0") {
                cfg.c0 = value.get<double>();
            } else if (key == "c1") {
                cfg.c1 = value.get<double>();
            } else if (key == "reps") {
                cfg.reps = value.get<std::int64_t>();
            } else if (key == "seed") {
                cfg.seed = value.get<std::uint64_t>();
            } else if (key == "grid_points") {
                cfg.grid_points = value.get<std::int64_t>();
            } else if (key == "loss_threshold") {
                cfg.loss_threshold = value.get<double>();
            } else if (key == "phi_smoothness") {
                cfg.phi_smoothness = value.get<double>();
            } else if (key == "output_path") {
                cfg.output_path = value.get<std::string>();
            } else {
                throw config_error("unknown config key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw config_error("config key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

experiment_config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("bad JSON in '" + path + "': " + e.what());
    }
    return parse_config(doc);
}

void validate_config(const experiment_config& cfg) {
    if (cfg.n_grid.empty()) throw config_error("n_grid must be non-empty");
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        if (cfg.n_grid[i] < 1) throw config_error("n_grid entries must be >= 1");
        if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
            throw config_error("n_grid must be strictly increasing");
        }
    }
    parse_delta_rule(cfg.delta);
    if (!(cfg.c > 0.0 && cfg.c < 1.0)) throw config_error("c must be in (0,1)");
    if (!(cfg.sigma2 > 0.0) || !std::isfinite(cfg.sigma2)) {
        throw config_error("sigma2 must be finite and > 0");
    }
    if (cfg.reps < 100) throw config_error("reps must be >= 100");
    if (cfg.grid_points < 1) throw config_error("grid_points must be >= 1");
    if (!(cfg.loss_threshold > 0.0)) throw config_error("loss_threshold must be > 0");
    if (!(cfg.phi_smoothness > 0.0)) throw config_error("phi_smoothness must be > 0");

    switch (cfg.experiment) {
        case experiment_kind::prop1:
            break;
        case experiment_kind::prop2:
            if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 0.01)) {
                throw config_error("epsilon must be in (0, 0.01]");
            }
            if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
                throw config_error("alpha must be in [0,1]");
            }
            if (cfg.sigma2 != 1.0) {
                throw config_error("prop2 closed forms assume sigma2 = 1");
            }
            break;
        case experiment_kind::prop3:
        case experiment_kind::mean_corollary:
            if (!(cfg.B > 2.0)) throw config_error("B must be > 2");
            if (cfg.sigma2 != 1.0) {
                throw config_error("built-in perturbation directions assume sigma2 = 1");
            }
            builtin_score(cfg.g_name);
            break;
        case experiment_kind::discussion_abs:
            if (!(cfg.c0 > 0.0 && cfg.c0 <= cfg.c1 && cfg.c1 < 1.0)) {
                throw config_error("need 0 < c0 <= c1 < 1");
            }
            if (cfg.sigma2 != 1.0) {
                throw config_error("built-in perturbation directions assume sigma2 = 1");
            }
            builtin_score(cfg.g_name);
            break;
    }
}

experiment_report run_prop1(const experiment_config& cfg_in) {
    experiment_config cfg = cfg_in;
    cfg.experiment = experiment_kind::prop1;
    validate_config(cfg);
    delta_rule rule = parse_delta_rule(cfg.delta);
    const double sigma = std::sqrt(cfg.sigma2);

    experiment_report report;
    report.experiment = cfg.experiment;
    report.config = cfg;
    seed_stream seeds{cfg.seed};

    for (std::int64_t n : cfg.n_grid) {
        const double fn = static_cast<double>(n);
        const double delta_n = delta_n_checked(rule, n);
        const double window = cfg.c * std::log(1.0 / delta_n);
        if (window < 4.0) {
            throw config_error("theta window is empty at n = " + std::to_string(n) +
                               ": c*log(1/delta_n) = " + num(window) +
                               " < 4; need delta_n <= exp(-4/c) = " + num(std::exp(-4.0 / cfg.c)));
        }
        const double theta_lo = 2.0 * sigma / std::sqrt(fn);
        const double theta_hi = sigma * std::sqrt(window) / std::sqrt(fn);
        const loss_fn loss = loss_fn::threshold(sigma / std::sqrt(fn));
        const double tau = std::pow(fn, -0.25);
        const model p0 = model::gaussian(0.0, cfg.sigma2).product(n);

        double inf_bound = std::numeric_limits<double>::infinity();
        for (double theta : window_grid(theta_lo, theta_hi, cfg.grid_points)) {
            experiment_row row;
            row.n = n;
            row.param = theta;
            row.seed = seeds.next();
            const model p1 = model::gaussian(theta, cfg.sigma2).product(n);
            affinity_result aff = affinity_gaussian(p1, p0);
            bound_report b = bound_generic(loss, theta, delta_n, aff);
            row.affinity = aff.value;
            row.delta_sep = b.delta_sep;
            row.bound = b.value;
            risk_estimate emp = mc_risk(hodges_estimator(tau), p1, loss, cfg.reps, row.seed);
            row.emp_risk = emp.mean;
            row.emp_se = emp.std_error;
            inf_bound = std::min(inf_bound, row.bound);
            report.rows.push_back(row);
        }

        per_n_summary summary;
        summary.n = n;
        summary.delta_n = delta_n;
        summary.inf_bound = inf_bound;
        std::uint64_t budget_seed = seeds.next();
        risk_estimate budget = mc_risk(hodges_estimator(tau), p0, loss, cfg.reps, budget_seed);
        summary.emp_budget = budget.mean;
        summary.emp_budget_se = budget.std_error;
        report.per_n.push_back(summary);

        push_check(report, "hodges_budget_within_delta[n=" + std::to_string(n) + "]",
                   budget.mean <= delta_n + 4.0 * budget.std_error, budget.mean, delta_n);
        if (delta_n <= 1e-6 && cfg.c == 0.5) {
            push_check(report, "inf_bound_above_0.99[n=" + std::to_string(n) + "]",
                       inf_bound > 0.99, inf_bound, 0.99);
        }
    }

    check_inf_bound_trend(report);
    finalize(report);
    return report;
}

experiment_report run_prop2(const experiment_config& cfg_in) {
    experiment_config cfg = cfg_in;
    cfg.experiment = experiment_kind::prop2;
    validate_config(cfg);
    const double eps = cfg.epsilon;
    const double log_inv_eps = std::log(1.0 / eps);
    const loss_fn loss = loss_fn::absolute();

    experiment_report report;
    report.experiment = cfg.experiment;
    report.config = cfg;
    seed_stream seeds{cfg.seed};

    for (std::int64_t n : cfg.n_grid) {
        const double fn = static_cast<double>(n);
        const double theta = std::sqrt(cfg.alpha * log_inv_eps / fn);
        const double budget = eps / std::sqrt(fn);

        experiment_row row;
        row.n = n;
        row.param = theta;
        row.seed = seeds.next();
        const model p0 = model::gaussian(0.0, 1.0).product(n);
        const model p1 = model::gaussian(theta, 1.0).product(n);
        affinity_result aff = affinity_gaussian(p1, p0);
        bound_report b = bound_power(loss, theta, budget, aff);
        row.affinity = aff.value;
        row.delta_sep = b.delta_sep;
        row.bound = b.value;
        report.rows.push_back(row);

        per_n_summary summary;
        summary.n = n;
        summary.delta_n = budget;
        summary.inf_bound = b.value;
        report.per_n.push_back(summary);

        const std::string tag = "[n=" + std::to_string(n) + "]";
        double aff_expected = std::pow(eps, -cfg.alpha);
        push_check(report, "affinity_equals_eps_pow_minus_alpha" + tag,
                   std::abs(aff.value - aff_expected) <= 1e-9 * aff_expected, aff.value,
                   aff_expected);
        if (cfg.alpha > 0.0) {
            double closed = std::sqrt(cfg.alpha / fn) *
                            sq(std::pow(log_inv_eps, 0.25) -
                               std::pow(std::pow(eps, 2.0 - 2.0 * cfg.alpha) / cfg.alpha, 0.25));
            push_check(report, "bound_matches_closed_form" + tag,
                       std::abs(b.value - closed) <= 1e-12, b.value, closed);
        } else {
            push_check(report, "bound_zero_at_alpha_zero" + tag, b.value == 0.0, b.value, 0.0);
        }
        if (cfg.alpha == 0.125) {
            double quarter = 0.25 * std::sqrt(log_inv_eps / fn);
            push_check(report, "bound_exceeds_quarter_rate" + tag, b.value >= quarter, b.value,
                       quarter);
        }
    }

    // Quartic-root inequality behind the quarter constant, on a fixed
    // 50-point eps grid over (1e-6, 1e-2].
    double min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) {
        double e = std::pow(10.0, -6.0 + 4.0 * static_cast<double>(i + 1) / 50.0);
        double lhs = std::pow(std::log(1.0 / e), 0.25) - std::pow(8.0 * std::pow(e, 1.75), 0.25);
        double rhs = std::pow(0.5 * std::log(1.0 / e), 0.25);
        min_margin = std::min(min_margin, lhs - rhs);
    }
    push_check(report, "quartic_root_inequality_on_eps_grid", min_margin >= 0.0, min_margin,
               0.0);

    finalize(report);
    return report;
}

namespace {

experiment_report run_tilt_window(const experiment_config& cfg_in, experiment_kind label) {
    experiment_config cfg = cfg_in;
    cfg.experiment = label;
    validate_config(cfg);
    delta_rule rule = parse_delta_rule(cfg.delta);
    const score g = builtin_score(cfg.g_name);
    const model base = model::gaussian(0.0, 1.0);
    const double mean0 = base.parameter();

    g0_check g0 = check_g0(base, [mean0](double z) { return z - mean0; }, g);
    if (!g0.in_class) {
        std::string reason = !g0.mean_ok ? "mean " + num(g0.mean) + " is not 0"
                             : !g0.second_moment_ok
                                 ? "second moment " + num(g0.second_moment) + " exceeds 1"
                                 : "pairing with the influence is 0";
        throw config_error("direction '" + g.name + "' is not admissible: " + reason);
    }
    const double pairing = g0.pairing;
    const double K = cfg.loss_threshold;
    const double edge = sq(K * cfg.B / pairing);  // needed c log(1/delta_n)

    experiment_report report;
    report.experiment = label;
    report.config = cfg;
    seed_stream seeds{cfg.seed};

    for (std::int64_t n : cfg.n_grid) {
        const double fn = static_cast<double>(n);
        const double delta_n = delta_n_checked(rule, n);
        const double window = cfg.c * std::log(1.0 / delta_n);
        if (edge > window) {
            std::ostringstream msg;
            msg << "t window is empty at n = " << n << ": need (KB/pairing)^2 = " << edge
                << " <= c*log(1/delta_n) = " << window << "; ";
            if (rule.kind == delta_rule::kind_t::power) {
                double n_min = std::ceil(std::exp(edge / (cfg.c * rule.value)));
                msg << "minimal feasible n is " << static_cast<std::int64_t>(n_min);
            } else {
                msg << "no n works under a constant delta rule; need delta <= "
                    << std::exp(-edge / cfg.c);
            }
            throw config_error(msg.str());
        }
        const double t_lo = K * cfg.B / (std::sqrt(fn) * std::abs(pairing));
        const double t_hi = std::sqrt(window / fn);
        const loss_fn loss = loss_fn::threshold(K / std::sqrt(fn));
        const double tau = std::pow(fn, -0.25);
        const model p0 = base.product(n);

        double inf_bound = std::numeric_limits<double>::infinity();
        for (double t : window_grid(t_lo, t_hi, cfg.grid_points)) {
            experiment_row row;
            row.n = n;
            row.param = t;
            row.seed = seeds.next();
            const model tilted = model::tilted(base, g, t, cfg.phi_smoothness);
            const double theta_t = tilted.parameter();
            const model p1 = tilted.product(n);
            affinity_result aff = affinity_quadrature(p1, p0);
            bound_report b = bound_generic(loss, std::abs(theta_t - mean0), delta_n, aff);
            row.affinity = aff.value;
            row.delta_sep = b.delta_sep;
            row.bound = b.value;
            risk_estimate emp = mc_risk(hodges_estimator(tau), p1, loss, cfg.reps, row.seed);
            row.emp_risk = emp.mean;
            row.emp_se = emp.std_error;
            inf_bound = std::min(inf_bound, row.bound);
            report.rows.push_back(row);
        }

        per_n_summary summary;
        summary.n = n;
        summary.delta_n = delta_n;
        summary.inf_bound = inf_bound;
        std::uint64_t budget_seed = seeds.next();
        risk_estimate budget = mc_risk(hodges_estimator(tau), p0, loss, cfg.reps, budget_seed);
        summary.emp_budget = budget.mean;
        summary.emp_budget_se = budget.std_error;
        report.per_n.push_back(summary);

        push_check(report, "hodges_budget_within_delta[n=" + std::to_string(n) + "]",
                   budget.mean <= delta_n + 4.0 * budget.std_error, budget.mean, delta_n);
    }

    check_inf_bound_trend(report);
    finalize(report);
    return report;
}

}  // namespace

experiment_report run_prop3(const experiment_config& cfg) {
    return run_tilt_window(cfg, experiment_kind::prop3);
}

experiment_report run_mean_corollary(const experiment_config& cfg) {
    return run_tilt_window(cfg, experiment_kind::mean_corollary);
}

experiment_report run_discussion_abs(const experiment_config& cfg_in) {
    experiment_config cfg = cfg_in;
    cfg.experiment = experiment_kind::discussion_abs;
    validate_config(cfg);
    delta_rule rule = parse_delta_rule(cfg.delta);
    const score g = builtin_score(cfg.g_name);
    const model base = model::gaussian(0.0, 1.0);
    const double mean0 = base.parameter();

    g0_check g0 = check_g0(base, [mean0](double z) { return z - mean0; }, g);
    if (!g0.in_class) {
        std::string reason = !g0.mean_ok ? "mean " + num(g0.mean) + " is not 0"
                             : !g0.second_moment_ok
                                 ? "second moment " + num(g0.second_moment) + " exceeds 1"
                                 : "pairing with the influence is 0";
        throw config_error("direction '" + g.name + "' is not admissible: " + reason);
    }
    const double pairing = g0.pairing;
    const loss_fn loss = loss_fn::absolute();

    experiment_report report;
    report.experiment = cfg.experiment;
    report.config = cfg;
    seed_stream seeds{cfg.seed};

    double empirical_constant = std::numeric_limits<double>::infinity();
    for (std::int64_t n : cfg.n_grid) {
        const double fn = static_cast<double>(n);
        const double delta_n = delta_n_checked(rule, n);
        const double log_term = std::log(1.0 / delta_n);
        const double t_lo = std::sqrt(cfg.c0 * log_term / fn);
        const double t_hi = std::sqrt(cfg.c1 * log_term / fn);
        const double budget = std::sqrt(delta_n / fn);
        const double scale = std::abs(pairing) * std::sqrt(log_term / fn);
        const double tau = std::pow(fn, -0.25);
        const model p0 = base.product(n);

        double inf_bound = std::numeric_limits<double>::infinity();
        double inf_normalized = std::numeric_limits<double>::infinity();
        for (double t : window_grid(t_lo, t_hi, cfg.grid_points)) {
            experiment_row row;
            row.n = n;
            row.param = t;
            row.seed = seeds.next();
            const model tilted = model::tilted(base, g, t, cfg.phi_smoothness);
            const double theta_t = tilted.parameter();
            const model p1 = tilted.product(n);
            affinity_result aff = affinity_quadrature(p1, p0);
            bound_report b = bound_power(loss, std::abs(theta_t - mean0), budget, aff);
            row.affinity = aff.value;
            row.delta_sep = b.delta_sep;
            row.bound = b.value;
            risk_estimate emp = mc_risk(hodges_estimator(tau), p1, loss, cfg.reps, row.seed);
            row.emp_risk = emp.mean;
            row.emp_se = emp.std_error;
            inf_bound = std::min(inf_bound, row.bound);
            inf_normalized = std::min(inf_normalized, row.bound / scale);
            report.rows.push_back(row);
        }

        per_n_summary summary;
        summary.n = n;
        summary.delta_n = delta_n;
        summary.inf_bound = inf_bound;
        std::uint64_t budget_seed = seeds.next();
        risk_estimate emp_budget = mc_risk(hodges_estimator(tau), p0, loss, cfg.reps,
                                           budget_seed);
        summary.emp_budget = emp_budget.mean;
        summary.emp_budget_se = emp_budget.std_error;
        summary.normalized_inf = inf_normalized;
        report.per_n.push_back(summary);
        empirical_constant = std::min(empirical_constant, inf_normalized);

        push_check(report, "hodges_budget_within_budget[n=" + std::to_string(n) + "]",
                   emp_budget.mean <= budget + 4.0 * emp_budget.std_error, emp_budget.mean,
                   budget);
    }

    report.empirical_constant = empirical_constant;
    push_check(report, "empirical_constant_positive", empirical_constant > 0.0,
               empirical_constant, 0.0);
    finalize(report);
    return report;
}

experiment_report run_experiment(const experiment_config& cfg) {
    switch (cfg.experiment) {
        case experiment_kind::prop1: return run_prop1(cfg);
        case experiment_kind::prop2: return run_prop2(cfg);
        case experiment_kind::prop3: return run_prop3(cfg);
        case experiment_kind::mean_corollary: return run_mean_corollary(cfg);
        case experiment_kind::discussion_abs: return run_discussion_abs(cfg);
    }
    throw config_error("corrupt experiment kind");
}

nlohmann::ordered_json report_to_json(const experiment_report& report) {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(report.experiment);

    nlohmann::ordered_json cfg;
    cfg["experiment"] = to_string(report.config.experiment);
    cfg["n_grid"] = report.config.n_grid;
    cfg["delta"] = report.config.delta;
    cfg["c"] = report.config.c;
    cfg["alpha"] = report.config.alpha;
    cfg["epsilon"] = report.config.epsilon;
    cfg["sigma2"] = report.config.sigma2;
    cfg["g_name"] = report.config.g_name;
    cfg["B"] = report.config.B;
    cfg["c0"] = report.config.c0;
    cfg["c1"] = report.config.c1;
    cfg["reps"] = report.config.reps;
    cfg["seed"] = report.config.seed;
    cfg["grid_points"] = report.config.grid_points;
    cfg["loss_threshold"] = report.config.loss_threshold;
    cfg["phi_smoothness"] = report.config.phi_smoothness;
    cfg["output_path"] = report.config.output_path;
    j["config"] = std::move(cfg);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const experiment_row& row : report.rows) {
        nlohmann::ordered_json r;
        r["n"] = row.n;
        r["param"] = row.param;
        r["affinity"] = row.affinity;
        r["delta_sep"] = row.delta_sep;
        r["bound"] = row.bound;
        r["emp_risk"] = row.emp_risk ? nlohmann::ordered_json(*row.emp_risk)
                                     : nlohmann::ordered_json(nullptr);
        r["emp_se"] = row.emp_se ? nlohmann::ordered_json(*row.emp_se)
                                 : nlohmann::ordered_json(nullptr);
        r["seed"] = row.seed;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);

    nlohmann::ordered_json per_n = nlohmann::ordered_json::array();
    for (const per_n_summary& s : report.per_n) {
        nlohmann::ordered_json r;
        r["n"] = s.n;
        r["delta_n"] = s.delta_n;
        r["inf_bound"] = s.inf_bound;
        r["emp_budget"] = s.emp_budget ? nlohmann::ordered_json(*s.emp_budget)
                                       : nlohmann::ordered_json(nullptr);
        r["emp_budget_se"] = s.emp_budget_se ? nlohmann::ordered_json(*s.emp_budget_se)
                                             : nlohmann::ordered_json(nullptr);
        r["normalized_inf"] = s.normalized_inf ? nlohmann::ordered_json(*s.normalized_inf)
                                               : nlohmann::ordered_json(nullptr);
        per_n.push_back(std::move(r));
    }
    j["per_n"] = std::move(per_n);

    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const check_row& check : report.checks) {
        nlohmann::ordered_json r;
        r["name"] = check.name;
        r["ok"] = check.ok;
        r["lhs"] = check.lhs;
        r["rhs"] = check.rhs;
        checks.push_back(std::move(r));
    }
    j["checks"] = std::move(checks);

    j["row_invariant_failures"] = report.row_invariant_failures;
    j["invariant_ok"] = report.invariant_ok;
    j["empirical_constant"] = report.empirical_constant
                                  ? nlohmann::ordered_json(*report.empirical_constant)
                                  : nlohmann::ordered_json(nullptr);
    return j;
}

void write_report_csv(const experiment_report& report, std::ostream& out) {
    auto fmt = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "n,param,affinity,delta_sep,bound,emp_risk,emp_se,seed\n";
    for (const experiment_row& row : report.rows) {
        out << row.n << ',' << fmt(row.param) << ',' << fmt(row.affinity) << ','
            << fmt(row.delta_sep) << ',' << fmt(row.bound) << ','
            << (row.emp_risk ? fmt(*row.emp_risk) : "") << ','
            << (row.emp_se ? fmt(*row.emp_se) : "") << ',' << row.seed << '\n';
    }
}

}  // namespace cri
