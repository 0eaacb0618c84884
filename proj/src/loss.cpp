#include "cribound/loss.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <utility>

#include "cribound/numeric.hpp"

namespace cri {
namespace {

// Full-consumption strtod so "pow:1x" and "thresh:" fail loudly.
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

}  // namespace

loss_fn::loss_fn(std::string name, loss_class cls, std::optional<double> k,
                 std::function<double(double)> eval)
    : name_(std::move(name)), cls_(cls), k_(k), eval_(std::move(eval)) {}

loss_fn loss_fn::squared() {
    return loss_fn("sq", loss_class::power, 2.0, [](double t) { return t * t; });
}

loss_fn loss_fn::absolute() {
    return loss_fn("abs", loss_class::power, 1.0, [](double t) { return t; });
}

loss_fn loss_fn::power(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw invalid_input_error("loss_fn::power: exponent must be positive and finite");
    }
    if (k == 2.0) return squared();
    if (k == 1.0) return absolute();
    std::ostringstream name;
    name << "pow:" << k;
    return loss_fn(name.str(), loss_class::power, k,
                   [k](double t) { return std::pow(t, k); });
}

loss_fn loss_fn::threshold(double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw invalid_input_error("loss_fn::threshold: threshold must be >= 0 and finite");
    }
    std::ostringstream name;
    name << "thresh:" << tau;
    return loss_fn(name.str(), loss_class::generic, std::nullopt,
                   [tau](double t) { return t >= tau ? 1.0 : 0.0; });
}

loss_fn loss_fn::custom(std::string name, loss_class cls,
                        std::function<double(double)> eval) {
    if (cls == loss_class::power) {
        throw invalid_input_error(
            "loss_fn::custom: power losses must be built with loss_fn::power");
    }
    loss_fn out(std::move(name), cls, std::nullopt, std::move(eval));
    out.validate();
    return out;
}

double loss_fn::exponent() const {
    if (!k_) throw invalid_input_error("loss_fn::exponent: not a power loss");
    return *k_;
}

void loss_fn::validate(double t_max, int grid) const {
    if (grid < 2) throw invalid_input_error("loss_fn::validate: grid too small");
    const auto ts = lin_spaced(0.0, t_max, grid);
    std::vector<double> vals;
    vals.reserve(ts.size());
    for (double t : ts) {
        double v = eval_(t);
        if (!(v >= 0.0) || !std::isfinite(v)) {
            std::ostringstream msg;
            msg << "loss '" << name_ << "' not non-negative/finite at t=" << t;
            throw invalid_input_error(msg.str());
        }
        vals.push_back(v);
    }
    for (std::size_t i = 1; i < vals.size(); ++i) {
        if (vals[i] + 1e-12 < vals[i - 1]) {
            std::ostringstream msg;
            msg << "loss '" << name_ << "' decreases between t=" << ts[i - 1]
                << " and t=" << ts[i];
            throw invalid_input_error(msg.str());
        }
    }
    if (cls_ == loss_class::convex) {
        // Midpoint convexity on the sampled grid; the 1e-9 scale slack keeps
        // honest convex evaluators from tripping on rounding.
        for (std::size_t i = 0; i + 2 < vals.size(); ++i) {
            double mid = eval_(0.5 * (ts[i] + ts[i + 2]));
            double chord = 0.5 * (vals[i] + vals[i + 2]);
            double slack = 1e-9 * (1.0 + std::abs(chord));
            if (mid > chord + slack) {
                std::ostringstream msg;
                msg << "loss '" << name_ << "' violates midpoint convexity near t="
                    << ts[i + 1];
                throw invalid_input_error(msg.str());
            }
        }
    }
    if (cls_ == loss_class::power) {
        for (double t : ts) {
            double expect = std::pow(t, *k_);
            double got = eval_(t);
            if (std::abs(got - expect) > 1e-12 * std::max(1.0, expect)) {
                std::ostringstream msg;
                msg << "loss '" << name_ << "' is not t^" << *k_ << " at t=" << t;
                throw invalid_input_error(msg.str());
            }
        }
    }
}

loss_fn parse_loss(const std::string& spec) {
    if (spec == "sq") return loss_fn::squared();
    if (spec == "abs") return loss_fn::absolute();
    if (spec.rfind("pow:", 0) == 0) {
        double k = parse_number(spec.substr(4), "loss spec '" + spec + "'");
        if (!(k > 0.0)) throw config_error("loss spec '" + spec + "': exponent must be > 0");
        return loss_fn::power(k);
    }
    if (spec.rfind("thresh:", 0) == 0) {
        double tau = parse_number(spec.substr(7), "loss spec '" + spec + "'");
        if (!(tau >= 0.0)) throw config_error("loss spec '" + spec + "': threshold must be >= 0");
        return loss_fn::threshold(tau);
    }
    throw config_error("unknown loss spec '" + spec + "'");
}

double loss_value(const loss_fn& loss, const std::vector<double>& v,
                  const std::vector<double>& theta) {
    return loss(euclidean_distance(v, theta));
}

double loss_value(const loss_fn& loss, double v, double theta) {
    return loss(std::abs(v - theta));
}

double separation(const loss_fn& loss, const std::vector<double>& theta0,
                  const std::vector<double>& theta1) {
    const double d = euclidean_distance(theta0, theta1);
    switch (loss.cls()) {
        case loss_class::convex:
            return 2.0 * loss(0.5 * d);
        case loss_class::generic:
            return loss(0.5 * d);
        case loss_class::power:
            return d;
    }
    throw invalid_input_error("separation: unknown loss class");
}

double separation(const loss_fn& loss, double theta0, double theta1) {
    return separation(loss, std::vector<double>{theta0}, std::vector<double>{theta1});
}

}  // namespace cri
