#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace shaperate {

/// Built-in localized-envelope models.
enum class EnvelopeModel {
    IsotonicBounded,    // (delta (x^{-1/2} v (1-x)^{-1/2})) ^ B
    ConvexBounded,      // same shape with the 2*sqrt(3) constant
    Linear1d,           // norm = delta
    SingleChangepoint,  // norm = delta
    MultiChangepoint    // norm = 1
};

/// Exact L2(P) norm of the truncated localized envelope at radius delta.
double envelope_norm(EnvelopeModel model, double delta, double bound = 1.0);

/// Mapping delta -> ||F(delta)||_{L2(P)} with a fitted growth exponent
/// gamma in [0,1] and log-correction exponent tau.
struct EnvelopeProfile {
    std::vector<double> deltas;
    std::vector<double> norms;
    double gamma_hat = 0.0;
    double log_correction = 0.0;
};

/// Least squares of log norm on (log delta, log log(1/delta)); gamma clipped
/// to [0,1]. Needs >= 4 points with deltas spanning >= 2 decades.
std::pair<double, double> fit_gamma(const std::vector<double>& deltas,
                                    const std::vector<double>& norms);

EnvelopeProfile envelope_profile(EnvelopeModel model, const std::vector<double>& deltas,
                                 double bound = 1.0);

/// Rate exponent r in loss ~ n^{-r} implied by envelope growth delta^gamma.
double predicted_rate_exponent(double gamma);

/// Nested dyadic family of interval indicators realizing envelope growth
/// delta^gamma: each level-l member has length base^{-l} with
/// base = 2^{1/(1-gamma)}, two children per parent.
struct TreeInterval {
    double start;
    double length;
};

struct TreeClass {
    double gamma;
    double base;                                   // 2^{1/(1-gamma)}
    std::vector<std::vector<TreeInterval>> levels; // levels[l-1]: 2^l intervals
};

enum class TreeChildSelector { Leftmost, SeededRandom };

TreeClass build_tree_class(double gamma, int max_level,
                           TreeChildSelector selector = TreeChildSelector::Leftmost,
                           std::uint64_t seed = 0);

/// L2 norm of the envelope of tree members with Pf^2 <= delta^2 (by the
/// nesting property: union measure at the critical level). `truncated` is
/// set when delta resolves below the deepest constructed level.
double tree_envelope_norm(const TreeClass& t, double delta, bool* truncated = nullptr);

/// Max over the delta grid of ||F~(delta)|| / delta^gamma; deltas below the
/// deepest level are skipped (truncation artifacts, not envelope values).
double tree_envelope_check(const TreeClass& t, const std::vector<double>& deltas);

}  // namespace shaperate
