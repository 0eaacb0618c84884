#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cribound/errors.hpp"

namespace cri {

enum class loss_class { generic, convex, power };

// Scalar loss l: [0, inf) -> [0, inf), non-decreasing, applied to the
// Euclidean distance between an estimate and the parameter. The class is
// declared by the caller rather than inferred: the risk bounds dispatch on
// it, and property inference from a black-box evaluator is unreliable. A
// sampling validator (validate()) rejects declarations the evaluator visibly
// violates.
class loss_fn {
public:
    static loss_fn squared();                 // t^2, power class k = 2
    static loss_fn absolute();                // t, power class k = 1
    static loss_fn power(double k);           // t^k, k > 0
    static loss_fn threshold(double tau);     // 1{t >= tau}, generic class
    // Custom evaluator declared generic or convex (power evaluators must go
    // through power()). Runs validate() on construction.
    static loss_fn custom(std::string name, loss_class cls,
                          std::function<double(double)> eval);

    loss_class cls() const { return cls_; }
    bool is_power() const { return cls_ == loss_class::power; }
    double exponent() const;                  // power class only
    const std::string& name() const { return name_; }

    double operator()(double t) const { return eval_(t); }

    // Samples the declared properties (non-negativity, monotonicity, midpoint
    // convexity, exact power form) on a grid and throws invalid_input_error
    // on violation.
    void validate(double t_max = 4.0, int grid = 64) const;

private:
    loss_fn(std::string name, loss_class cls, std::optional<double> k,
            std::function<double(double)> eval);

    std::string name_;
    loss_class cls_;
    std::optional<double> k_;
    std::function<double(double)> eval_;
};

// Spec-string grammar: "sq" | "abs" | "pow:<k>" | "thresh:<tau>".
// Case-sensitive; malformed strings raise config_error.
loss_fn parse_loss(const std::string& spec);

// l(‖v - theta‖). Dimensions must match.
double loss_value(const loss_fn& loss, const std::vector<double>& v,
                  const std::vector<double>& theta);
double loss_value(const loss_fn& loss, double v, double theta);

// Separation between two parameter points, per loss class:
//   convex  2*l(‖t0-t1‖/2),  generic  l(‖t0-t1‖/2),  power  ‖t0-t1‖.
double separation(const loss_fn& loss, const std::vector<double>& theta0,
                  const std::vector<double>& theta1);
double separation(const loss_fn& loss, double theta0, double theta1);

}  // namespace cri
