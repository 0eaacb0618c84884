#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cribound/errors.hpp"

namespace cri {

// Standard normal CDF through erfc, which stays accurate deep in the lower
// tail where 0.5*(1+erf(x/sqrt2)) would cancel.
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double sq(double x) { return x * x; }

// Neumaier-compensated accumulator. Monte Carlo aggregation sums millions of
// terms; plain summation would make results depend on blocking choices at the
// 1e-12 level, which the determinism contract does not allow.
class kahan_sum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// count points, multiplicatively spaced, endpoints included. count == 1
// returns {lo}.
inline std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > 0.0) || hi < lo) {
        throw invalid_input_error("log_spaced: need 0 < lo <= hi");
    }
    if (count < 1) throw invalid_input_error("log_spaced: count must be >= 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        out.push_back(lo);
        return out;
    }
    const double la = std::log(lo);
    const double lb = std::log(hi);
    for (int i = 0; i < count; ++i) {
        double f = static_cast<double>(i) / (count - 1);
        out.push_back(std::exp(la + f * (lb - la)));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline std::vector<double> lin_spaced(double lo, double hi, int count) {
    if (count < 1) throw invalid_input_error("lin_spaced: count must be >= 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        out.push_back(lo);
        return out;
    }
    for (int i = 0; i < count; ++i) {
        double f = static_cast<double>(i) / (count - 1);
        out.push_back(lo + f * (hi - lo));
    }
    return out;
}

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw invalid_input_error("euclidean_distance: dimension mismatch");
    }
    kahan_sum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(sq(a[i] - b[i]));
    return std::sqrt(s.value());
}

}  // namespace cri
