#include "cribound/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cribound/numeric.hpp"
#include "cribound/quadrature.hpp"

namespace cri {
namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

double parse_number(const std::string& text, const std::string& context) {
    if (text.empty()) throw config_error(context + ": missing number");
    const char* begin = text.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end != begin + text.size() || !std::isfinite(value)) {
        throw config_error(context + ": bad number '" + text + "'");
    }
    return value;
}

std::int64_t parse_count(const std::string& text, const std::string& context) {
    double value = parse_number(text, context);
    auto n = static_cast<std::int64_t>(value);
    if (static_cast<double>(n) != value || n < 1) {
        throw config_error(context + ": expected a positive integer, got '" + text + "'");
    }
    return n;
}

std::string num(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

// Mean and second moment of g under a marginal base model.
std::pair<double, double> score_moments(const model& base, const score& g) {
    double mean = expectation(base, g.fn);
    double m2 = expectation(base, [&](double z) { return sq(g.fn(z)); });
    return {mean, m2};
}

}  // namespace

double phi(double u) {
    // Logistic in disguise; evaluate the bounded-exponent branch.
    if (u >= 0.0) return 2.0 / (1.0 + std::exp(-2.0 * u));
    double e = std::exp(2.0 * u);
    return 2.0 * e / (e + 1.0);
}

score builtin_score(const std::string& name) {
    if (name == "id") {
        return score{"id", [](double z) { return z; }, 0.0, 1.0};
    }
    if (name == "hermite2") {
        return score{"hermite2", [](double z) { return (z * z - 1.0) / std::sqrt(2.0); }, 0.0,
                     1.0};
    }
    if (name == "mix") {
        return score{"mix", [](double z) { return (z + z * z - 1.0) / std::sqrt(3.0); }, 0.0,
                     1.0};
    }
    throw config_error("unknown score '" + name + "' (expected id, hermite2, or mix)");
}

model model::gaussian(double mean, double variance) {
    if (!std::isfinite(mean) || !std::isfinite(variance) || variance <= 0.0) {
        throw invalid_input_error("gaussian model requires finite mean and variance > 0");
    }
    model m;
    m.kind_ = kind_t::gaussian;
    m.mean_ = mean;
    m.var_ = variance;
    m.theta_ = mean;
    return m;
}

model model::discrete(std::vector<double> support, std::vector<double> pmf) {
    if (support.empty() || support.size() != pmf.size()) {
        throw invalid_input_error("discrete model requires matching non-empty support and pmf");
    }
    // Sort the atoms so point lookups can binary-search.
    std::vector<std::size_t> order(support.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    std::vector<double> s(support.size()), p(support.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        s[i] = support[order[i]];
        p[i] = pmf[order[i]];
    }
    kahan_sum total;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s[i])) throw invalid_input_error("discrete support must be finite");
        if (i > 0 && s[i] == s[i - 1]) {
            throw invalid_input_error("discrete support values must be distinct");
        }
        if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
            throw invalid_input_error("discrete pmf entries must be finite and >= 0");
        }
        total.add(p[i]);
    }
    if (std::abs(total.value() - 1.0) > 1e-9) {
        throw invalid_input_error("discrete pmf sums to " + num(total.value()) +
                                  ", expected 1 within 1e-9");
    }
    // Renormalize exactly so downstream sums see a true probability vector.
    for (double& pi : p) pi /= total.value();

    model m;
    m.kind_ = kind_t::discrete;
    m.support_ = std::move(s);
    m.pmf_ = std::move(p);
    m.cdf_.resize(m.pmf_.size());
    kahan_sum run;
    for (std::size_t i = 0; i < m.pmf_.size(); ++i) {
        run.add(m.pmf_[i]);
        m.cdf_[i] = run.value();
    }
    m.cdf_.back() = 1.0;
    kahan_sum mean;
    for (std::size_t i = 0; i < m.pmf_.size(); ++i) mean.add(m.pmf_[i] * m.support_[i]);
    m.theta_ = mean.value();
    return m;
}

model model::tilted(const model& base, score g, double t, double phi_smoothness) {
    if (base.is_product()) {
        throw invalid_input_error("tilt applies to a marginal model, not a product");
    }
    if (!std::isfinite(t)) throw invalid_input_error("tilt parameter t must be finite");
    if (!(phi_smoothness > 0.0)) {
        throw invalid_input_error("phi smoothness constant must be > 0");
    }
    auto [g_mean, g_m2] = score_moments(base, g);
    if (std::abs(g_mean - g.declared_mean) > 1e-6 ||
        std::abs(g_m2 - g.declared_second_moment) > 1e-6) {
        throw invalid_input_error("score '" + g.name + "' moments (" + num(g_mean) + ", " +
                                  num(g_m2) + ") disagree with declared (" +
                                  num(g.declared_mean) + ", " + num(g.declared_second_moment) +
                                  ") beyond 1e-6");
    }
    double c_t = tilt_normalizer(base, g, t);
    if (!(c_t > 0.0) || !std::isfinite(c_t)) {
        throw numeric_error("tilt normalizer came out non-positive: " + num(c_t));
    }
    // phi has phi(0) = 1, phi'(0) = 1 and mean-zero g, so the normalizer can
    // drift from 1 only through the second-order term.
    double drift_cap = 0.5 * phi_smoothness * t * t * g_m2 + 1e-9;
    if (std::abs(c_t - 1.0) > drift_cap) {
        throw numeric_error("tilt normalizer " + num(c_t) + " violates |C_t - 1| <= " +
                            num(drift_cap));
    }

    model m;
    m.kind_ = kind_t::tilted;
    m.inner_ = std::make_shared<model>(base);
    m.g_ = std::move(g);
    m.t_ = t;
    m.phi_k_ = phi_smoothness;
    m.c_t_ = c_t;
    if (base.is_discrete()) {
        kahan_sum mean;
        for (std::size_t i = 0; i < base.support_.size(); ++i) {
            mean.add(base.support_[i] * phi(t * m.g_.fn(base.support_[i])) * base.pmf_[i]);
        }
        m.theta_ = mean.value() / c_t;
    } else {
        auto [lo, hi] = base.quad_domain();
        const model& b = base;
        const score& gs = m.g_;
        double tt = t;
        quad_result r = integrate(
            [&b, &gs, tt](double z) { return z * phi(tt * gs.fn(z)) * b.density(z); }, lo, hi);
        m.theta_ = r.value / c_t;
    }
    return m;
}

model model::product(std::int64_t n) const {
    if (n < 1) throw invalid_input_error("product count must be >= 1");
    if (n == 1 && !is_product()) return *this;
    model m;
    m.kind_ = kind_t::product;
    m.rep_ = rep_ * n;
    if (is_product()) {
        m.inner_ = inner_;
    } else {
        m.inner_ = std::make_shared<model>(*this);
    }
    m.theta_ = theta_;
    m.theta_declared_ = theta_declared_;
    return m;
}

model model::with_parameter(double theta) const {
    if (!std::isfinite(theta)) throw invalid_input_error("declared parameter must be finite");
    model m = *this;
    m.theta_ = theta;
    m.theta_declared_ = true;
    return m;
}

const model& model::marginal() const { return is_product() ? *inner_ : *this; }

bool model::is_discrete() const { return marginal().kind_ == kind_t::discrete; }

double model::density(double z) const {
    switch (kind_) {
        case kind_t::gaussian:
            return std::exp(-sq(z - mean_) / (2.0 * var_)) / std::sqrt(two_pi * var_);
        case kind_t::discrete: {
            auto it = std::lower_bound(support_.begin(), support_.end(), z);
            if (it != support_.end() && *it == z) {
                return pmf_[static_cast<std::size_t>(it - support_.begin())];
            }
            return 0.0;
        }
        case kind_t::tilted:
            return phi(t_ * g_.fn(z)) * inner_->density(z) / c_t_;
        case kind_t::product:
            throw invalid_input_error("density is defined on marginals; call marginal() first");
    }
    throw invalid_input_error("corrupt model kind");
}

const std::vector<double>& model::support() const {
    if (kind_ != kind_t::discrete) {
        throw invalid_input_error("support() requires a discrete marginal");
    }
    return support_;
}

const std::vector<double>& model::pmf() const {
    if (kind_ != kind_t::discrete) {
        throw invalid_input_error("pmf() requires a discrete marginal");
    }
    return pmf_;
}

std::pair<double, double> model::quad_domain() const {
    switch (kind_) {
        case kind_t::gaussian: {
            double sigma = std::sqrt(var_);
            return {mean_ - 12.0 * sigma, mean_ + 12.0 * sigma};
        }
        case kind_t::tilted:
            // phi < 2 caps the tilted tail at twice the base tail over C_t.
            return inner_->quad_domain();
        case kind_t::discrete:
            throw invalid_input_error("discrete models sum over atoms; no quadrature domain");
        case kind_t::product:
            throw invalid_input_error("quadrature domain is defined on marginals");
    }
    throw invalid_input_error("corrupt model kind");
}

double model::sample_one(rng& r) const {
    const model& m = marginal();
    switch (m.kind_) {
        case kind_t::gaussian:
            return m.mean_ + std::sqrt(m.var_) * r.normal();
        case kind_t::discrete: {
            double u = r.uniform();
            auto it = std::upper_bound(m.cdf_.begin(), m.cdf_.end(), u);
            std::size_t i = static_cast<std::size_t>(it - m.cdf_.begin());
            if (i >= m.support_.size()) i = m.support_.size() - 1;
            return m.support_[i];
        }
        case kind_t::tilted: {
            for (int attempt = 0; attempt < 10000; ++attempt) {
                double z = m.inner_->sample_one(r);
                if (r.uniform() < 0.5 * phi(m.t_ * m.g_.fn(z))) return z;
            }
            throw numeric_error("tilt rejection sampler stalled: 10000 consecutive rejections");
        }
        case kind_t::product:
            break;  // unreachable, marginal() stripped it
    }
    throw invalid_input_error("corrupt model kind");
}

void model::sample(rng& r, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(rep_));
    for (double& x : out) x = sample_one(r);
}

const model& model::base() const {
    if (kind_ != kind_t::tilted) throw invalid_input_error("base() requires a tilted model");
    return *inner_;
}

const score& model::tilt_score() const {
    if (kind_ != kind_t::tilted) {
        throw invalid_input_error("tilt_score() requires a tilted model");
    }
    return g_;
}

double model::tilt_t() const {
    if (kind_ != kind_t::tilted) throw invalid_input_error("tilt_t() requires a tilted model");
    return t_;
}

double model::normalizer() const {
    if (kind_ != kind_t::tilted) {
        throw invalid_input_error("normalizer() requires a tilted model");
    }
    return c_t_;
}

double model::phi_smoothness() const {
    if (kind_ != kind_t::tilted) {
        throw invalid_input_error("phi_smoothness() requires a tilted model");
    }
    return phi_k_;
}

double model::gaussian_mean() const {
    if (kind_ != kind_t::gaussian) {
        throw invalid_input_error("gaussian_mean() requires a gaussian model");
    }
    return mean_;
}

double model::gaussian_variance() const {
    if (kind_ != kind_t::gaussian) {
        throw invalid_input_error("gaussian_variance() requires a gaussian model");
    }
    return var_;
}

std::string model::describe() const {
    std::ostringstream out;
    switch (kind_) {
        case kind_t::gaussian:
            out << "gauss(mean=" << mean_ << ", var=" << var_ << ")";
            break;
        case kind_t::discrete:
            out << "discrete(" << support_.size() << " atoms)";
            break;
        case kind_t::tilted:
            out << "tilt(" << inner_->describe() << ", g=" << g_.name << ", t=" << t_ << ")";
            break;
        case kind_t::product:
            out << inner_->describe() << "^" << rep_;
            break;
    }
    if (theta_declared_) out << " with theta=" << theta_;
    return out.str();
}

double tilt_normalizer(const model& base, const score& g, double t) {
    return expectation(base, [&](double z) { return phi(t * g.fn(z)); });
}

double tilt_density(const model& tilted, double z) {
    const model& m = tilted.marginal();
    if (m.kind() != model::kind_t::tilted) {
        throw invalid_input_error("tilt_density() requires a tilted model");
    }
    return m.density(z);
}

tilt_sample_result tilt_sample(const model& tilted, std::int64_t count, std::uint64_t seed) {
    const model& m = tilted.marginal();
    if (m.kind() != model::kind_t::tilted) {
        throw invalid_input_error("tilt_sample() requires a tilted model");
    }
    if (count < 0) throw invalid_input_error("tilt_sample() count must be >= 0");
    const model& base = m.base();
    const score& g = m.tilt_score();
    double t = m.tilt_t();

    tilt_sample_result result;
    result.values.reserve(static_cast<std::size_t>(count));
    rng r(seed);
    while (static_cast<std::int64_t>(result.values.size()) < count) {
        double z = base.sample_one(r);
        ++result.proposals;
        if (r.uniform() < 0.5 * phi(t * g.fn(z))) result.values.push_back(z);
        if (result.proposals >= 10000 && result.acceptance_rate() < 0.25) {
            throw numeric_error("tilt rejection sampler acceptance rate " +
                                num(result.acceptance_rate()) +
                                " after 10000 proposals; expected about C_t/2");
        }
    }
    return result;
}

double expectation(const model& m, const std::function<double(double)>& f) {
    const model& marg = m.marginal();
    if (marg.is_discrete()) {
        const auto& support = marg.support();
        const auto& pmf = marg.pmf();
        kahan_sum s;
        for (std::size_t i = 0; i < support.size(); ++i) s.add(pmf[i] * f(support[i]));
        return s.value();
    }
    auto [lo, hi] = marg.quad_domain();
    quad_result r = integrate([&](double z) { return f(z) * marg.density(z); }, lo, hi);
    return r.value;
}

double influence_pairing(const model& base, const std::function<double(double)>& influence,
                         const score& g) {
    return expectation(base, [&](double z) { return influence(z) * g.fn(z); });
}

void validate_score(const model& base, const score& g) {
    auto [mean, m2] = score_moments(base.marginal(), g);
    if (std::abs(mean - g.declared_mean) > 1e-6) {
        throw invalid_input_error("score '" + g.name + "' mean " + num(mean) +
                                  " disagrees with declared " + num(g.declared_mean));
    }
    if (std::abs(m2 - g.declared_second_moment) > 1e-6) {
        throw invalid_input_error("score '" + g.name + "' second moment " + num(m2) +
                                  " disagrees with declared " + num(g.declared_second_moment));
    }
}

g0_check check_g0(const model& base, const std::function<double(double)>& influence,
                  const score& g) {
    g0_check out;
    auto [mean, m2] = score_moments(base.marginal(), g);
    out.mean = mean;
    out.second_moment = m2;
    out.pairing = influence_pairing(base.marginal(), influence, g);
    out.mean_ok = std::abs(out.mean) <= 1e-8;
    out.second_moment_ok = out.second_moment <= 1.0 + 1e-8;
    out.pairing_nonzero = std::abs(out.pairing) > 1e-8;
    out.in_class = out.mean_ok && out.second_moment_ok && out.pairing_nonzero;
    return out;
}

model parse_model(const std::string& spec) {
    std::string body = spec;
    std::int64_t reps = 1;
    std::size_t pow_pos = body.rfind("^n:");
    if (pow_pos != std::string::npos) {
        reps = parse_count(body.substr(pow_pos + 3), "model spec '" + spec + "' product count");
        body = body.substr(0, pow_pos);
    }

    model m = [&]() {
        if (body.rfind("gauss:", 0) == 0) {
            std::string rest = body.substr(6);
            std::size_t colon = rest.find(':');
            if (colon == std::string::npos) {
                throw config_error("model spec '" + spec + "': expected gauss:<mean>:<var>");
            }
            double mean = parse_number(rest.substr(0, colon), "model spec '" + spec + "' mean");
            double var = parse_number(rest.substr(colon + 1), "model spec '" + spec + "' var");
            if (!(var > 0.0)) {
                throw config_error("model spec '" + spec + "': variance must be > 0");
            }
            return model::gaussian(mean, var);
        }
        if (body.rfind("tilt:", 0) == 0) {
            // The base spec may contain colons, so split the last two fields
            // off the right: ...:<g-name>:<t>.
            std::string rest = body.substr(5);
            std::size_t t_sep = rest.rfind(':');
            if (t_sep == std::string::npos || t_sep == 0) {
                throw config_error("model spec '" + spec + "': expected tilt:<base>:<g>:<t>");
            }
            std::size_t g_sep = rest.rfind(':', t_sep - 1);
            if (g_sep == std::string::npos) {
                throw config_error("model spec '" + spec + "': expected tilt:<base>:<g>:<t>");
            }
            std::string base_spec = rest.substr(0, g_sep);
            std::string g_name = rest.substr(g_sep + 1, t_sep - g_sep - 1);
            double t = parse_number(rest.substr(t_sep + 1), "model spec '" + spec + "' t");
            model base = parse_model(base_spec);
            return model::tilted(base, builtin_score(g_name), t);
        }
        if (body.rfind("discrete:", 0) == 0) {
            std::string path = body.substr(9);
            std::ifstream in(path);
            if (!in) throw config_error("cannot open discrete model file '" + path + "'");
            nlohmann::json doc;
            try {
                in >> doc;
            } catch (const nlohmann::json::exception& e) {
                throw config_error("bad JSON in '" + path + "': " + e.what());
            }
            if (!doc.contains("support") || !doc.contains("pmf")) {
                throw config_error("'" + path + "' must hold {\"support\": [...], \"pmf\": [...]}");
            }
            std::vector<double> support, pmf;
            try {
                support = doc.at("support").get<std::vector<double>>();
                pmf = doc.at("pmf").get<std::vector<double>>();
            } catch (const nlohmann::json::exception& e) {
                throw config_error("bad arrays in '" + path + "': " + e.what());
            }
            return model::discrete(std::move(support), std::move(pmf));
        }
        throw config_error("unknown model spec '" + spec + "'");
    }();

    return reps == 1 ? m : m.product(reps);
}

}  // namespace cri
