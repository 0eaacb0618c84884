#include "cribound/mc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cribound/bounds.hpp"
#include "cribound/numeric.hpp"
#include "cribound/parallel.hpp"
#include "cribound/rng.hpp"

namespace cri {
namespace {

std::string num(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

struct mc_block {
    double sum = 0.0;
    double sum2 = 0.0;
    std::int64_t n = 0;
};

// Golden-section search for a unimodal objective on [lo, hi].
template <class Fn>
double golden_min(Fn&& f, double lo, double hi, double tol) {
    constexpr double gr = 0.61803398874989485;
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// State for one constrained-minimization instance on a shared finite support.
struct oracle_problem {
    const std::vector<double>* q0;
    const std::vector<double>* q1;
    const loss_fn* loss;
    double theta0, theta1;
    double lo, hi;  // segment between the two parameters
    bool grid_mode;  // set for generic losses; per-coordinate search is a grid

    double risk0(const std::vector<double>& v) const {
        kahan_sum s;
        for (std::size_t j = 0; j < v.size(); ++j) {
            s.add((*q0)[j] * (*loss)(std::abs(v[j] - theta0)));
        }
        return s.value();
    }
    double risk1(const std::vector<double>& v) const {
        kahan_sum s;
        for (std::size_t j = 0; j < v.size(); ++j) {
            s.add((*q1)[j] * (*loss)(std::abs(v[j] - theta1)));
        }
        return s.value();
    }

    // argmin over [lo, hi] of q1_j l(|v - theta1|) + lambda q0_j l(|v - theta0|).
    double coordinate_min(std::size_t j, double lambda) const {
        auto f = [&](double v) {
            return (*q1)[j] * (*loss)(std::abs(v - theta1)) +
                   lambda * (*q0)[j] * (*loss)(std::abs(v - theta0));
        };
        if (grid_mode) {
            // Piecewise-structured losses: scan a fine grid plus both
            // endpoints and keep the best point seen.
            constexpr int points = 2001;
            double best = lo;
            double best_f = f(lo);
            for (int i = 1; i < points; ++i) {
                double v = lo + (hi - lo) * static_cast<double>(i) /
                                    static_cast<double>(points - 1);
                double fv = f(v);
                if (fv < best_f) {
                    best = v;
                    best_f = fv;
                }
            }
            return best;
        }
        if (loss->is_power() && loss->exponent() < 1.0) {
            // Concave in the distance on the segment, so the minimum sits at
            // an endpoint.
            return f(lo) <= f(hi) ? lo : hi;
        }
        return golden_min(f, lo, hi, 1e-10);
    }

    std::vector<double> solve_for(double lambda) const {
        std::vector<double> v(q0->size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = coordinate_min(j, lambda);
        return v;
    }
};

}  // namespace

estimator mean_estimator() {
    return estimator{"mean", [](const std::vector<double>& z) {
                         kahan_sum s;
                         for (double x : z) s.add(x);
                         return std::vector<double>{s.value() / static_cast<double>(z.size())};
                     }};
}

estimator hodges_estimator(double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw invalid_input_error("hodges threshold must be finite and >= 0");
    }
    std::ostringstream name;
    name << "hodges:" << tau;
    return estimator{name.str(), [tau](const std::vector<double>& z) {
                         kahan_sum s;
                         for (double x : z) s.add(x);
                         double mean = s.value() / static_cast<double>(z.size());
                         return std::vector<double>{std::abs(mean) > tau ? mean : 0.0};
                     }};
}

estimator constant_estimator(double c) {
    std::ostringstream name;
    name << "const:" << c;
    return estimator{name.str(),
                     [c](const std::vector<double>&) { return std::vector<double>{c}; }};
}

risk_estimate mc_risk(const estimator& est, const model& m, const loss_fn& loss,
                      std::int64_t reps, std::uint64_t seed) {
    if (reps < 100) throw invalid_input_error("mc_risk needs reps >= 100");
    constexpr std::int64_t block_size = 1024;
    const std::size_t blocks = static_cast<std::size_t>((reps + block_size - 1) / block_size);
    const double theta = m.parameter();

    std::vector<mc_block> stats = map_indexed<mc_block>(blocks, [&](std::size_t b) {
        std::int64_t begin = static_cast<std::int64_t>(b) * block_size;
        std::int64_t n = std::min(block_size, reps - begin);
        rng r(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<double> sample;
        std::vector<double> target;
        kahan_sum sum, sum2;
        for (std::int64_t i = 0; i < n; ++i) {
            m.sample(r, sample);
            std::vector<double> point = est.map(sample);
            if (point.empty()) {
                throw invalid_input_error("estimator '" + est.name + "' returned no coordinates");
            }
            target.assign(point.size(), theta);
            double x = loss_value(loss, point, target);
            sum.add(x);
            sum2.add(x * x);
        }
        return mc_block{sum.value(), sum2.value(), n};
    });

    kahan_sum sum, sum2;
    for (const mc_block& b : stats) {
        sum.add(b.sum);
        sum2.add(b.sum2);
    }
    double n = static_cast<double>(reps);
    double mean = sum.value() / n;
    double var = std::max(0.0, (sum2.value() - n * mean * mean) / (n - 1.0));

    risk_estimate out;
    out.mean = mean;
    out.std_error = std::sqrt(var / n);
    out.reps = reps;
    out.seed = seed;
    return out;
}

double oracle_min_risk(const model& p0, const model& p1, double theta0, double theta1,
                       const loss_fn& loss, double delta_budget, oracle_solution* detail) {
    const model& m0 = p0.marginal();
    const model& m1 = p1.marginal();
    if (!m0.is_discrete() || !m1.is_discrete()) {
        throw invalid_input_error("oracle_min_risk requires discrete models");
    }
    if (m0.support() != m1.support()) {
        throw invalid_input_error("oracle_min_risk requires identical supports");
    }
    if (m0.support().size() > 64) {
        throw invalid_input_error("oracle_min_risk supports at most 64 atoms");
    }
    if (!std::isfinite(theta0) || !std::isfinite(theta1)) {
        throw invalid_input_error("oracle parameters must be finite");
    }
    if (!(delta_budget >= 0.0) || !std::isfinite(delta_budget)) {
        throw invalid_input_error("oracle budget must be finite and >= 0");
    }
    if (loss(0.0) > delta_budget) {
        throw infeasible_budget_error("budget " + num(delta_budget) +
                                      " is below loss(0) = " + num(loss(0.0)) +
                                      "; every estimator violates it");
    }

    oracle_problem prob;
    prob.q0 = &m0.pmf();
    prob.q1 = &m1.pmf();
    prob.loss = &loss;
    prob.theta0 = theta0;
    prob.theta1 = theta1;
    prob.lo = std::min(theta0, theta1);
    prob.hi = std::max(theta0, theta1);
    prob.grid_mode = loss.cls() == loss_class::generic;

    auto finish = [&](std::vector<double> v, double lambda) {
        oracle_solution sol;
        sol.value = prob.risk1(v);
        sol.budget_used = prob.risk0(v);
        sol.lambda = lambda;
        sol.upper_bound_only = prob.grid_mode;
        sol.v = std::move(v);
        if (detail) *detail = sol;
        return sol.value;
    };

    const std::size_t m = m0.support().size();

    // Unconstrained optimum: sit on theta1 everywhere. If that already meets
    // the budget nothing can do better, risk1 hits its floor loss(0).
    std::vector<double> at_theta1(m, theta1);
    if (prob.risk0(at_theta1) <= delta_budget) return finish(std::move(at_theta1), 0.0);

    // Dual search: risk0 of the per-coordinate minimizer is non-increasing in
    // the multiplier, so double until feasible then bisect.
    double lambda_hi = 1.0;
    std::vector<double> v_hi = prob.solve_for(lambda_hi);
    int doublings = 0;
    while (prob.risk0(v_hi) > delta_budget) {
        lambda_hi *= 2.0;
        v_hi = prob.solve_for(lambda_hi);
        if (++doublings > 200) {
            throw numeric_error("oracle multiplier search failed to reach the budget");
        }
    }
    double lambda_lo = lambda_hi > 1.0 ? lambda_hi / 2.0 : 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        if (delta_budget - prob.risk0(v_hi) <= 1e-9) break;
        double mid = 0.5 * (lambda_lo + lambda_hi);
        std::vector<double> v_mid = prob.solve_for(mid);
        if (prob.risk0(v_mid) <= delta_budget) {
            lambda_hi = mid;
            v_hi = std::move(v_mid);
        } else {
            lambda_lo = mid;
        }
    }

    // The dual solution can leave budget slack at a multiplier discontinuity.
    // Spend it: push coordinates toward theta1 (never raises risk1) as far as
    // the budget allows, bisecting on the position where a full move is
    // infeasible.
    std::vector<double> v = std::move(v_hi);
    for (int sweep = 0; sweep < 2; ++sweep) {
        for (std::size_t j = 0; j < m; ++j) {
            if (v[j] == theta1) continue;
            double used_others;
            {
                kahan_sum s;
                for (std::size_t i = 0; i < m; ++i) {
                    if (i != j) s.add((*prob.q0)[i] * loss(std::abs(v[i] - theta0)));
                }
                used_others = s.value();
            }
            double allowance = delta_budget - used_others;
            auto cost = [&](double y) { return (*prob.q0)[j] * loss(std::abs(y - theta0)); };
            if (cost(theta1) <= allowance) {
                v[j] = theta1;
                continue;
            }
            if (cost(v[j]) > allowance) continue;  // already at the edge
            double feas = v[j];
            double infeas = theta1;
            for (int iter = 0; iter < 100; ++iter) {
                double mid = 0.5 * (feas + infeas);
                if (cost(mid) <= allowance) {
                    feas = mid;
                } else {
                    infeas = mid;
                }
            }
            v[j] = feas;
        }
    }
    return finish(std::move(v), lambda_hi);
}

violation_report violation_search(std::int64_t instances, const loss_fn& loss,
                                  std::uint64_t seed) {
    if (instances < 1) throw invalid_input_error("violation_search needs instances >= 1");

    struct outcome {
        violation_case c;
        bool violated = false;
    };

    std::vector<outcome> results =
        map_indexed<outcome>(static_cast<std::size_t>(instances), [&](std::size_t i) {
            rng r(derive_seed(seed, static_cast<std::uint64_t>(i)));
            std::int64_t atoms = 2 + static_cast<std::int64_t>(r.next_u64() % 7);

            std::vector<double> support(static_cast<std::size_t>(atoms));
            std::vector<double> w0(support.size()), w1(support.size());
            for (std::size_t j = 0; j < support.size(); ++j) {
                support[j] = static_cast<double>(j);
                w0[j] = r.uniform() + 0.05;  // bounded away from zero: keeps the
                w1[j] = r.uniform() + 0.05;  // pair absolutely continuous
            }
            double s0 = 0.0, s1 = 0.0;
            for (std::size_t j = 0; j < support.size(); ++j) {
                s0 += w0[j];
                s1 += w1[j];
            }
            for (std::size_t j = 0; j < support.size(); ++j) {
                w0[j] /= s0;
                w1[j] /= s1;
            }

            double theta0 = 2.0 * r.uniform() - 1.0;
            double theta1 = theta0;
            while (std::abs(theta1 - theta0) < 0.05) theta1 = 2.0 * r.uniform() - 1.0;
            double d = std::abs(theta1 - theta0);
            // A budget below the cost of sitting on theta1 keeps the
            // constraint active; loss(0) <= budget keeps it feasible.
            double budget = loss(0.0) + (loss(d) - loss(0.0)) * r.uniform();

            model p0 = model::discrete(support, w0).with_parameter(theta0);
            model p1 = model::discrete(support, w1).with_parameter(theta1);

            bound_options opt;
            opt.affinity = affinity_choice::quadrature;
            bound_report b = bound_from_models(p1, p0, loss, budget, opt);
            double oracle = oracle_min_risk(p0, p1, theta0, theta1, loss, budget);

            outcome out;
            out.c.index = static_cast<std::int64_t>(i);
            out.c.atoms = atoms;
            out.c.theta0 = theta0;
            out.c.theta1 = theta1;
            out.c.budget = budget;
            out.c.bound = b.value;
            out.c.oracle = oracle;
            out.c.gap = b.value - oracle;
            out.violated = oracle < b.value - 1e-6;
            return out;
        });

    violation_report report;
    report.instances = instances;
    report.loss_name = loss.name();
    report.seed = seed;
    report.max_gap = -std::numeric_limits<double>::infinity();
    for (const outcome& out : results) {
        report.max_gap = std::max(report.max_gap, out.c.gap);
        if (out.violated) {
            ++report.violations;
            if (report.examples.size() < 10) report.examples.push_back(out.c);
        }
    }
    return report;
}

}  // namespace cri
