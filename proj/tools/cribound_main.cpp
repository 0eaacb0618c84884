#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cribound/bounds.hpp"
#include "cribound/experiments.hpp"
#include "cribound/mc_sim.hpp"

namespace {

using nlohmann::ordered_json;

// Non-finite doubles have no JSON representation; emit null and let the
// overflow flag carry the meaning.
ordered_json json_number(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

cri::affinity_choice parse_affinity_choice(const std::string& name) {
    if (name == "auto") return cri::affinity_choice::automatic;
    if (name == "closed") return cri::affinity_choice::closed_form;
    if (name == "quad") return cri::affinity_choice::quadrature;
    if (name == "mc") return cri::affinity_choice::monte_carlo;
    throw cri::config_error("unknown affinity method '" + name +
                            "' (expected auto, closed, quad, mc)");
}

cri::affinity_result compute_affinity(const cri::model& p1, const cri::model& p0,
                                      cri::affinity_choice choice, std::int64_t count,
                                      std::uint64_t seed) {
    switch (choice) {
        case cri::affinity_choice::automatic: return cri::affinity_auto(p1, p0);
        case cri::affinity_choice::closed_form: return cri::affinity_gaussian(p1, p0);
        case cri::affinity_choice::quadrature: return cri::affinity_quadrature(p1, p0);
        case cri::affinity_choice::monte_carlo:
            return cri::affinity_monte_carlo(p1, p0, count, seed);
    }
    throw cri::config_error("corrupt affinity choice");
}

ordered_json affinity_to_json(const cri::affinity_result& aff) {
    ordered_json j;
    j["value"] = json_number(aff.value);
    j["method"] = cri::to_string(aff.method);
    j["error_estimate"] = json_number(aff.error_estimate);
    j["overflow"] = aff.overflow;
    j["meta"] = aff.meta;
    return j;
}

// Estimator spec: "mean", "hodges" (threshold defaults to rep^{-1/4}), or
// "hodges:<tau>".
cri::estimator parse_estimator(const std::string& spec, std::int64_t rep) {
    if (spec == "mean") return cri::mean_estimator();
    if (spec == "hodges") {
        return cri::hodges_estimator(std::pow(static_cast<double>(rep), -0.25));
    }
    if (spec.rfind("hodges:", 0) == 0) {
        const std::string text = spec.substr(7);
        const char* begin = text.c_str();
        char* end = nullptr;
        double tau = std::strtod(begin, &end);
        if (text.empty() || end != begin + text.size() || !std::isfinite(tau)) {
            throw cri::config_error("estimator spec '" + spec + "': bad threshold");
        }
        return cri::hodges_estimator(tau);
    }
    throw cri::config_error("unknown estimator spec '" + spec +
                            "' (expected mean, hodges, hodges:<tau>)");
}

void emit(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained-risk lower bounds: affinities, bounds, simulation, experiments"};
    app.require_subcommand(1);

    auto* aff_cmd = app.add_subcommand("affinity", "Chi-squared affinity between two models");
    std::string aff_p1, aff_p0, aff_method = "auto";
    std::int64_t aff_count = 1000000;
    std::uint64_t aff_seed = 0;
    aff_cmd->add_option("--p1", aff_p1, "numerator model spec")->required();
    aff_cmd->add_option("--p0", aff_p0, "denominator model spec")->required();
    aff_cmd->add_option("--method", aff_method, "auto|closed|quad|mc (default auto)");
    aff_cmd->add_option("--count", aff_count, "monte carlo draws (default 1e6)");
    aff_cmd->add_option("--seed", aff_seed, "monte carlo seed");

    auto* bound_cmd = app.add_subcommand("bound", "Risk lower bound between two models");
    std::string bnd_loss, bnd_p1, bnd_p0, bnd_method = "auto";
    double bnd_delta = 0.0;
    std::int64_t bnd_count = 1000000;
    std::uint64_t bnd_seed = 0;
    bound_cmd->add_option("--loss", bnd_loss, "loss spec (sq, abs, pow:<k>, thresh:<tau>)")
        ->required();
    bound_cmd->add_option("--p0", bnd_p0, "budget-side model spec")->required();
    bound_cmd->add_option("--p1", bnd_p1, "bound-side model spec")->required();
    bound_cmd->add_option("--delta", bnd_delta, "risk budget at p0")->required();
    bound_cmd->add_option("--affinity-method", bnd_method, "auto|closed|quad|mc");
    bound_cmd->add_option("--count", bnd_count, "monte carlo draws (default 1e6)");
    bound_cmd->add_option("--seed", bnd_seed, "monte carlo seed");

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo risk of an estimator");
    std::string sim_est, sim_model, sim_loss;
    std::int64_t sim_reps = 10000;
    std::uint64_t sim_seed = 0;
    sim_cmd->add_option("--est", sim_est, "mean, hodges, or hodges:<tau>")->required();
    sim_cmd->add_option("--model", sim_model, "model spec")->required();
    sim_cmd->add_option("--loss", sim_loss, "loss spec")->required();
    sim_cmd->add_option("--reps", sim_reps, "replications (default 1e4)");
    sim_cmd->add_option("--seed", sim_seed, "master seed");

    auto* oracle_cmd =
        app.add_subcommand("oracle", "Random-instance soundness search for the bound");
    std::string orc_loss;
    std::int64_t orc_instances = 1000;
    std::uint64_t orc_seed = 0;
    oracle_cmd->add_option("--instances", orc_instances, "instances to draw (default 1000)");
    oracle_cmd->add_option("--loss", orc_loss, "loss spec")->required();
    oracle_cmd->add_option("--seed", orc_seed, "master seed");

    auto* exp_cmd = app.add_subcommand("experiment", "Run a configured experiment");
    std::string exp_name, exp_config, exp_out, exp_csv;
    exp_cmd->add_option("name", exp_name, "prop1|prop2|prop3|mean|discussion")->required();
    exp_cmd->add_option("--config", exp_config, "JSON config path")->required();
    exp_cmd->add_option("--out", exp_out, "write the JSON report here too");
    exp_cmd->add_option("--csv", exp_csv, "write a CSV of the rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (aff_cmd->parsed()) {
            cri::model p1 = cri::parse_model(aff_p1);
            cri::model p0 = cri::parse_model(aff_p0);
            cri::affinity_result aff =
                compute_affinity(p1, p0, parse_affinity_choice(aff_method), aff_count, aff_seed);
            ordered_json j;
            j["command"] = "affinity";
            j["p1"] = aff_p1;
            j["p0"] = aff_p0;
            j["affinity"] = affinity_to_json(aff);
            emit(j);
            return 0;
        }

        if (bound_cmd->parsed()) {
            cri::model p1 = cri::parse_model(bnd_p1);
            cri::model p0 = cri::parse_model(bnd_p0);
            cri::loss_fn loss = cri::parse_loss(bnd_loss);
            cri::bound_options opt;
            opt.affinity = parse_affinity_choice(bnd_method);
            opt.mc_count = bnd_count;
            opt.mc_seed = bnd_seed;
            cri::bound_report b = cri::bound_from_models(p1, p0, loss, bnd_delta, opt);
            ordered_json j;
            j["command"] = "bound";
            j["loss"] = bnd_loss;
            j["p0"] = bnd_p0;
            j["p1"] = bnd_p1;
            j["delta_budget"] = b.delta_budget;
            j["distance"] = std::abs(p1.parameter() - p0.parameter());
            j["delta_sep"] = b.delta_sep;
            j["affinity"] = json_number(b.affinity);
            j["affinity_overflow"] = b.affinity_overflow;
            j["branch"] = b.branch;
            j["k"] = b.k ? ordered_json(*b.k) : ordered_json(nullptr);
            j["value"] = b.value;
            emit(j);
            return 0;
        }

        if (sim_cmd->parsed()) {
            cri::model m = cri::parse_model(sim_model);
            cri::estimator est = parse_estimator(sim_est, m.rep());
            cri::loss_fn loss = cri::parse_loss(sim_loss);
            cri::risk_estimate risk = cri::mc_risk(est, m, loss, sim_reps, sim_seed);
            ordered_json j;
            j["command"] = "simulate";
            j["estimator"] = est.name;
            j["model"] = sim_model;
            j["loss"] = sim_loss;
            j["reps"] = risk.reps;
            j["seed"] = risk.seed;
            j["risk"] = risk.mean;
            j["std_error"] = risk.std_error;
            emit(j);
            return 0;
        }

        if (oracle_cmd->parsed()) {
            cri::loss_fn loss = cri::parse_loss(orc_loss);
            cri::violation_report rep = cri::violation_search(orc_instances, loss, orc_seed);
            ordered_json j;
            j["command"] = "oracle";
            j["instances"] = rep.instances;
            j["loss"] = rep.loss_name;
            j["seed"] = rep.seed;
            j["violations"] = rep.violations;
            j["max_gap"] = json_number(rep.max_gap);
            ordered_json examples = ordered_json::array();
            for (const cri::violation_case& c : rep.examples) {
                ordered_json e;
                e["index"] = c.index;
                e["atoms"] = c.atoms;
                e["theta0"] = c.theta0;
                e["theta1"] = c.theta1;
                e["budget"] = c.budget;
                e["bound"] = c.bound;
                e["oracle"] = c.oracle;
                e["gap"] = c.gap;
                examples.push_back(std::move(e));
            }
            j["examples"] = std::move(examples);
            emit(j);
            return 0;
        }

        if (exp_cmd->parsed()) {
            std::ifstream in(exp_config);
            if (!in) throw cri::config_error("cannot open config file '" + exp_config + "'");
            nlohmann::json doc;
            try {
                in >> doc;
            } catch (const nlohmann::json::exception& e) {
                throw cri::config_error("bad JSON in '" + exp_config + "': " + e.what());
            }
            cri::experiment_config cfg = cri::parse_config(doc);
            cri::experiment_kind kind = cri::parse_experiment(exp_name);
            if (doc.contains("experiment") && cfg.experiment != kind) {
                throw cri::config_error("config file names experiment '" +
                                        cri::to_string(cfg.experiment) +
                                        "' but the command line says '" + exp_name + "'");
            }
            cfg.experiment = kind;
            cri::experiment_report report = cri::run_experiment(cfg);
            ordered_json j = cri::report_to_json(report);
            emit(j);
            std::string out_path = !exp_out.empty() ? exp_out : report.config.output_path;
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                if (!out) throw cri::config_error("cannot write report to '" + out_path + "'");
                out << j.dump(2) << "\n";
            }
            if (!exp_csv.empty()) {
                std::ofstream out(exp_csv);
                if (!out) throw cri::config_error("cannot write CSV to '" + exp_csv + "'");
                cri::write_report_csv(report, out);
            }
            return report.row_invariant_failures == 0 ? 0 : 1;
        }
    } catch (const cri::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cri::invalid_input_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const cri::infeasible_budget_error& e) {
        std::cerr << "infeasible budget: " << e.what() << "\n";
        return 2;
    } catch (const cri::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
