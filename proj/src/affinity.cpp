#include "cribound/affinity.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cribound/numeric.hpp"
#include "cribound/parallel.hpp"
#include "cribound/quadrature.hpp"
#include "cribound/rng.hpp"

namespace cri {
namespace {

constexpr double exp_overflow_cutoff = 700.0;  // exp(709.78...) is the double ceiling

std::string num(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

affinity_result overflow_result(affinity_method method, const std::string& meta) {
    affinity_result r;
    r.value = std::numeric_limits<double>::infinity();
    r.method = method;
    r.error_estimate = 0.0;
    r.meta = meta;
    r.overflow = true;
    return r;
}

// Marginal affinity by exact summation over shared atoms.
affinity_result affinity_discrete(const model& p1, const model& p0) {
    const auto& s1 = p1.support();
    const auto& s0 = p0.support();
    if (s1 != s0) {
        throw invalid_input_error(
            "discrete affinity requires identical supports; use a common atom list");
    }
    const auto& q1 = p1.pmf();
    const auto& q0 = p0.pmf();
    kahan_sum sum;
    for (std::size_t i = 0; i < q0.size(); ++i) {
        if (q0[i] == 0.0) {
            if (q1[i] > 1e-15) {
                throw absolute_continuity_error("p1 puts mass " + num(q1[i]) + " on atom " +
                                                num(s0[i]) + " where p0 vanishes");
            }
            continue;
        }
        sum.add(q1[i] * q1[i] / q0[i]);
    }
    affinity_result r;
    r.value = sum.value();
    r.method = affinity_method::quadrature;
    r.error_estimate = 0.0;
    r.meta = "exact sum over " + std::to_string(q0.size()) + " atoms";
    return r;
}

// Marginal affinity by adaptive quadrature of p1^2/p0.
affinity_result affinity_continuous(const model& p1, const model& p0) {
    auto [lo1, hi1] = p1.quad_domain();
    auto [lo0, hi0] = p0.quad_domain();
    double lo = std::min(lo0, lo1);
    double hi = std::max(hi0, hi1);

    auto integrand = [&](double z) {
        double d0 = p0.density(z);
        double d1 = p1.density(z);
        if (d0 < 1e-300) {
            if (d1 > 1e-12) {
                throw absolute_continuity_error("p1 has density " + num(d1) + " at z = " +
                                                num(z) + " where p0 vanishes");
            }
            return 0.0;
        }
        return d1 * d1 / d0;
    };

    // A chi-squared integrand that has not decayed by the truncation boundary
    // signals a divergent affinity (numerator tail heavier than denominator).
    double boundary = (integrand(lo) + integrand(hi)) * (hi - lo);
    if (boundary > 1e-6) {
        throw numeric_error("affinity integrand does not vanish at the domain boundary "
                            "(residual " + num(boundary) + "); the affinity diverges");
    }

    quad_result q = integrate(integrand, lo, hi);
    affinity_result r;
    r.value = q.value;
    r.method = affinity_method::quadrature;
    r.error_estimate = q.error;
    r.meta = "adaptive quadrature on [" + num(lo) + ", " + num(hi) + "], " +
             std::to_string(q.intervals) + " panels";

    // The exact value is >= 1; tiny undershoot is quadrature noise, anything
    // larger means the integral was computed wrong.
    if (r.value < 1.0) {
        if (r.value >= 1.0 - 1e-9) {
            r.value = 1.0;
        } else {
            throw numeric_error("affinity quadrature returned " + num(r.value) +
                                " < 1; integration failed");
        }
    }
    return r;
}

struct mc_block {
    double sum = 0.0;   // block total of w^2
    double sum2 = 0.0;  // block total of w^4, for the standard error
    std::int64_t n = 0;
};

}  // namespace

std::string to_string(affinity_method m) {
    switch (m) {
        case affinity_method::closed_form: return "closed_form";
        case affinity_method::tensorized: return "tensorized";
        case affinity_method::quadrature: return "quadrature";
        case affinity_method::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

affinity_result affinity_gaussian(const model& p1, const model& p0) {
    if (p1.rep() != p0.rep()) {
        throw invalid_input_error("affinity requires equal sample counts on both models");
    }
    const model& m1 = p1.marginal();
    const model& m0 = p0.marginal();
    if (m1.kind() != model::kind_t::gaussian || m0.kind() != model::kind_t::gaussian) {
        throw invalid_input_error("closed-form affinity requires gaussian marginals");
    }
    if (m1.gaussian_variance() != m0.gaussian_variance()) {
        throw invalid_input_error(
            "closed-form affinity requires equal variances; use quadrature instead");
    }
    double d = m1.gaussian_mean() - m0.gaussian_mean();
    double n = static_cast<double>(p0.rep());
    double exponent = n * d * d / m0.gaussian_variance();
    std::string meta = "exp(n d^2 / var), n=" + std::to_string(p0.rep()) + ", d=" + num(d) +
                       ", var=" + num(m0.gaussian_variance());
    if (exponent > exp_overflow_cutoff) {
        return overflow_result(affinity_method::closed_form, meta + "; exponent " +
                                                                 num(exponent) + " saturates");
    }
    affinity_result r;
    r.value = std::exp(exponent);
    r.method = affinity_method::closed_form;
    r.error_estimate = 0.0;
    r.meta = meta;
    return r;
}

affinity_result affinity_product(const affinity_result& marginal, std::int64_t n) {
    if (n < 1) throw invalid_input_error("product count must be >= 1");
    if (marginal.overflow) {
        return overflow_result(affinity_method::tensorized, "marginal already saturated");
    }
    if (!(marginal.value >= 1.0)) {
        throw invalid_input_error("marginal affinity " + num(marginal.value) +
                                  " < 1 cannot be tensorized");
    }
    double log_total = static_cast<double>(n) * std::log(marginal.value);
    std::string meta = "marginal " + num(marginal.value) + " to the power " + std::to_string(n);
    if (log_total > exp_overflow_cutoff) {
        return overflow_result(affinity_method::tensorized,
                               meta + "; log value " + num(log_total) + " saturates");
    }
    affinity_result r;
    r.value = std::exp(log_total);
    r.method = affinity_method::tensorized;
    // First-order error growth: (v + e)^n ~ v^n (1 + n e/v).
    double rel = marginal.value > 0.0 ? marginal.error_estimate / marginal.value : 0.0;
    r.error_estimate = r.value * static_cast<double>(n) * rel;
    r.meta = meta;
    return r;
}

affinity_result affinity_quadrature(const model& p1, const model& p0) {
    if (p1.rep() != p0.rep()) {
        throw invalid_input_error("affinity requires equal sample counts on both models");
    }
    const model& m1 = p1.marginal();
    const model& m0 = p0.marginal();
    if (m1.is_discrete() != m0.is_discrete()) {
        throw invalid_input_error(
            "affinity between discrete and continuous models is not supported");
    }
    affinity_result marginal =
        m0.is_discrete() ? affinity_discrete(m1, m0) : affinity_continuous(m1, m0);
    if (p0.rep() == 1) return marginal;
    return affinity_product(marginal, p0.rep());
}

affinity_result affinity_monte_carlo(const model& p1, const model& p0, std::int64_t count,
                                     std::uint64_t seed) {
    if (p1.rep() != p0.rep()) {
        throw invalid_input_error("affinity requires equal sample counts on both models");
    }
    if (count < 2) throw invalid_input_error("monte carlo affinity needs count >= 2");
    const model& m1 = p1.marginal();
    const model& m0 = p0.marginal();
    const std::int64_t rep = p0.rep();

    constexpr std::int64_t block_size = 65536;
    const std::size_t blocks = static_cast<std::size_t>((count + block_size - 1) / block_size);

    std::vector<mc_block> stats = map_indexed<mc_block>(blocks, [&](std::size_t b) {
        std::int64_t begin = static_cast<std::int64_t>(b) * block_size;
        std::int64_t n = std::min(block_size, count - begin);
        rng r(derive_seed(seed, static_cast<std::uint64_t>(b)));
        kahan_sum sum, sum2;
        for (std::int64_t i = 0; i < n; ++i) {
            double w = 1.0;
            for (std::int64_t j = 0; j < rep; ++j) {
                double z = m0.sample_one(r);
                w *= m1.density(z) / m0.density(z);
            }
            double x = w * w;
            if (!std::isfinite(x)) {
                throw absolute_continuity_error(
                    "density ratio overflowed during monte carlo affinity; the pair may "
                    "violate absolute continuity");
            }
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
    double n = static_cast<double>(count);
    double mean = sum.value() / n;
    double var = std::max(0.0, (sum2.value() - n * mean * mean) / (n - 1.0));

    affinity_result r;
    r.value = mean;
    r.method = affinity_method::monte_carlo;
    r.error_estimate = std::sqrt(var / n);
    r.meta = std::to_string(count) + " draws from p0, seed " + std::to_string(seed);
    return r;
}

affinity_result affinity_auto(const model& p1, const model& p0) {
    const model& m1 = p1.marginal();
    const model& m0 = p0.marginal();
    bool closed = m1.kind() == model::kind_t::gaussian && m0.kind() == model::kind_t::gaussian &&
                  m1.gaussian_variance() == m0.gaussian_variance() && p1.rep() == p0.rep();
    return closed ? affinity_gaussian(p1, p0) : affinity_quadrature(p1, p0);
}

lemma_tilt_report verify_lemma_tilt(const model& base, const score& g,
                                    const std::vector<double>& t_grid,
                                    double phi_smoothness) {
    if (t_grid.empty()) throw invalid_input_error("tilt diagnostic needs a non-empty t grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0)) {
            throw invalid_input_error("tilt diagnostic grid must be positive");
        }
        if (i > 0 && !(t_grid[i] < t_grid[i - 1])) {
            throw invalid_input_error("tilt diagnostic grid must be strictly decreasing");
        }
    }
    const model& b = base.marginal();

    lemma_tilt_report report;
    report.second_moment = expectation(b, [&](double z) { return sq(g.fn(z)); });
    report.rows.reserve(t_grid.size());
    for (double t : t_grid) {
        model tilted = model::tilted(b, g, t, phi_smoothness);
        lemma_tilt_row row;
        row.t = t;
        row.chi2 = affinity_quadrature(tilted, b).value - 1.0;
        row.ratio = row.chi2 / (t * t);
        row.c_t = tilted.normalizer();
        row.c_t_cap = 0.5 * phi_smoothness * t * t * report.second_moment + 1e-9;
        row.c_t_ok = std::abs(row.c_t - 1.0) <= row.c_t_cap;
        report.rows.push_back(row);
    }

    report.ratio_trend_monotone = true;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        double prev = std::abs(report.rows[i - 1].ratio - report.second_moment);
        double curr = std::abs(report.rows[i].ratio - report.second_moment);
        if (!(curr < prev)) report.ratio_trend_monotone = false;
    }
    report.all_c_t_ok = true;
    for (const auto& row : report.rows) report.all_c_t_ok = report.all_c_t_ok && row.c_t_ok;
    return report;
}

}  // namespace cri
