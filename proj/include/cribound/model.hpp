#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cribound/errors.hpp"
#include "cribound/rng.hpp"

namespace cri {

// Bounded multiplicative tilt 2/(1 + e^{-2u}): increasing, range (0, 2),
// phi(0) = 1, phi'(0) = 1, phi(u) + phi(-u) = 2. Saturates instead of
// overflowing at extreme arguments.
double phi(double u);

// max|phi''| over the real line, computed numerically (the maximum sits at
// u = log(2 + sqrt(3))/2; see the unit tests for the cross-check). This is
// the default smoothness constant in the normalizer bound
// |C_t - 1| <= (smoothness/2) t^2 E0[g^2].
inline constexpr double default_phi_smoothness = 0.76980035891950102;

// Perturbation direction with caller-declared moments under the base
// distribution. Declarations are re-verified by quadrature (tolerance 1e-6)
// whenever a tilted model is built.
struct score {
    std::string name;
    std::function<double(double)> fn;
    double declared_mean = 0.0;
    double declared_second_moment = 1.0;
};

// Built-in scores, calibrated under the standard normal:
//   "id"        z
//   "hermite2"  (z^2 - 1)/sqrt(2)
//   "mix"       (z + z^2 - 1)/sqrt(3)
score builtin_score(const std::string& name);

// A distribution on the real line with a scalar parameter theta(P), a
// marginal density or pmf, a sampler, and n-fold product lifting. The
// parameter functional is the mean unless overridden via with_parameter
// (needed when pmfs carry externally assigned parameter labels). Models are
// immutable after construction: tilted normalizers and parameter values are
// computed eagerly.
class model {
public:
    enum class kind_t { gaussian, discrete, tilted, product };

    static model gaussian(double mean, double variance);
    static model discrete(std::vector<double> support, std::vector<double> pmf);
    static model tilted(const model& base, score g, double t,
                        double phi_smoothness = default_phi_smoothness);

    // n-fold i.i.d. product. Applying it to a product multiplies the counts.
    model product(std::int64_t n) const;

    // Copy with a declared parameter value replacing the mean functional.
    model with_parameter(double theta) const;

    kind_t kind() const { return kind_; }
    bool is_product() const { return kind_ == kind_t::product; }
    std::int64_t rep() const { return rep_; }      // sample dimension
    const model& marginal() const;                 // strips the product layer
    double parameter() const { return theta_; }

    bool is_discrete() const;
    // Marginal density (continuous kinds) or point mass (discrete kinds).
    double density(double z) const;
    const std::vector<double>& support() const;
    const std::vector<double>& pmf() const;

    // Truncated quadrature domain for the marginal. Gaussian-based models use
    // mean +- 12 sigma: the omitted tails carry mass < 2e-32, far below every
    // quadrature tolerance in use.
    std::pair<double, double> quad_domain() const;

    double sample_one(rng& r) const;                     // one marginal draw
    void sample(rng& r, std::vector<double>& out) const; // rep() i.i.d. draws

    // Tilted accessors.
    const model& base() const;
    const score& tilt_score() const;
    double tilt_t() const;
    double normalizer() const;
    double phi_smoothness() const;

    // Gaussian accessors.
    double gaussian_mean() const;
    double gaussian_variance() const;

    // Human-readable description for report metadata.
    std::string describe() const;

private:
    model() = default;

    kind_t kind_ = kind_t::gaussian;
    double theta_ = 0.0;
    bool theta_declared_ = false;
    std::int64_t rep_ = 1;
    // gaussian
    double mean_ = 0.0;
    double var_ = 1.0;
    // discrete
    std::vector<double> support_;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    // tilted (base) / product (marginal)
    std::shared_ptr<const model> inner_;
    score g_;
    double t_ = 0.0;
    double phi_k_ = default_phi_smoothness;
    double c_t_ = 1.0;
};

// Normalizer C_t = E_base[phi(t g(Z))], by adaptive quadrature for continuous
// bases and exact summation for discrete ones.
double tilt_normalizer(const model& base, const score& g, double t);

// Density of a tilted model at z (same as m.density(z); kept as a named
// operation for symmetry with the construction formula phi(t g(z)) p0(z)/C_t).
double tilt_density(const model& tilted, double z);

struct tilt_sample_result {
    std::vector<double> values;
    std::int64_t proposals = 0;
    double acceptance_rate() const {
        return proposals == 0 ? 0.0
                              : static_cast<double>(values.size()) / static_cast<double>(proposals);
    }
};

// Rejection sampler: propose from the base, accept with probability
// phi(t g(z))/2 (valid since phi <= 2). Expected acceptance rate is C_t/2;
// a rate below 0.25 after 10^4 proposals indicates a broken normalizer and
// raises numeric_error. Deterministic given the seed.
tilt_sample_result tilt_sample(const model& tilted, std::int64_t count, std::uint64_t seed);

// E_m[f(Z)] for a marginal model (products are reduced to their marginal).
double expectation(const model& m, const std::function<double(double)>& f);

// E_base[influence(Z) g(Z)]: the slope of t -> theta(P_{t,g}) at t = 0.
double influence_pairing(const model& base, const std::function<double(double)>& influence,
                         const score& g);

// Recomputes the declared score moments by quadrature/summation and throws
// invalid_input_error when they disagree beyond 1e-6.
void validate_score(const model& base, const score& g);

// Admissible perturbation directions: mean zero, second moment <= 1, and a
// non-zero pairing with the influence function (tolerance 1e-8 per clause).
struct g0_check {
    double mean = 0.0;
    double second_moment = 0.0;
    double pairing = 0.0;
    bool mean_ok = false;
    bool second_moment_ok = false;
    bool pairing_nonzero = false;
    bool in_class = false;
};
g0_check check_g0(const model& base, const std::function<double(double)>& influence,
                  const score& g);

// Model spec grammar:
//   "gauss:<mean>:<var>"
//   "tilt:<base-spec>:<g-name>:<t>"      g-name in {id, hermite2, mix}
//   "discrete:<path.json>"               file holds {"support": [...], "pmf": [...]}
// plus an optional product suffix "^n:<count>" on any of the above.
model parse_model(const std::string& spec);

}  // namespace cri
