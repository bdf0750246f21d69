#pragma once

#include <cstdint>
#include <vector>

namespace shaperate {

/// Symmetric, mean-zero-where-defined error laws with seedable samplers and
/// analytic (or numeric, for the stable family) survival functions.
class ErrorLaw {
public:
    enum class Kind { Gaussian, StudentT, SymStable, ParetoEta };

    static ErrorLaw gaussian(double sigma);
    static ErrorLaw student_t(double nu, double scale = 1.0);
    static ErrorLaw sym_stable(double alpha, double scale = 1.0);  // alpha in (0,2)
    static ErrorLaw pareto_eta(double scale = 1.0);  // P(|eta| > t) = 1/(1+(t/scale)^2)

    Kind kind() const { return kind_; }
    double param() const { return param_; }   // sigma / nu / alpha, by kind
    double scale() const { return scale_; }

    /// i.i.d. draws, deterministic given the seed.
    std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

    /// Survival function S(t) = P(|xi| > t).
    double survival(double t) const;

    /// Power-tail exponent: S(t) ~ c t^{-te}. Infinity for the Gaussian.
    double tail_exponent() const;

private:
    ErrorLaw(Kind k, double p, double s) : kind_(k), param_(p), scale_(s) {}
    Kind kind_;
    double param_;
    double scale_;
};

/// L_{p,1} norm: integral of S(t)^{1/p} over (0, infinity); +infinity when
/// the tail exponent makes the integral diverge.
double lp1_norm(const ErrorLaw& law, double p);

/// Derives a per-replication stream seed from the base seed, the replication
/// index, and a stream tag (e.g. the sample-size index); stable across runs.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replication,
                          std::uint64_t stream = 0);

}  // namespace shaperate
