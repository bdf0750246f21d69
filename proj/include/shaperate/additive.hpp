#pragma once

#include "shaperate/convex.hpp"
#include "shaperate/isotonic.hpp"

#include <cstdint>
#include <optional>

namespace shaperate {

struct BivariateSample {
    std::vector<double> xs;  // in [0,1]
    std::vector<double> zs;  // in [0,1]
    std::vector<double> ys;

    std::size_t n() const { return xs.size(); }
    void validate() const;
};

enum class ShapeConstraint { Isotonic, Convex };

/// The nuisance class H. Every fitted member is empirically centered; the
/// centering constant is absorbed into the shape-constrained component.
struct HClass {
    enum class Kind {
        AffineBounded,              // h(z) = beta (z - 1/2), beta in [-1,1]
        BinnedSieve,                // G bins, values clipped to [-B,B], centered
        CenteredIntervalIndicators  // h(z) = 1_{[a,b]}(z) - (b-a), grid endpoints
    };
    Kind kind = Kind::AffineBounded;
    int grid = 16;     // bins (BinnedSieve) or endpoint grid cells (indicators)
    double bound = 1.0;
    bool degenerate_zero = false;  // H = {0}; reduces to the univariate fit

    static HClass affine_bounded();
    static HClass binned_sieve(int bins, double bound);
    static HClass centered_interval_indicators(int grid);
    static HClass zero();
};

/// A fitted member of H together with the empirical centering offset already
/// removed (the offset lives in the shape component).
struct HFit {
    HClass spec;
    double beta = 0.0;                 // AffineBounded
    std::vector<double> bin_values;    // BinnedSieve
    double a = 0.0, b = 0.0;           // CenteredIntervalIndicators
    double center_offset = 0.0;        // subtracted empirical mean

    double operator()(double z) const;
};

struct AdditiveFit {
    ShapeConstraint shape;
    std::optional<IsotonicFit> iso;
    std::optional<ConvexFit> cvx;
    HFit h;
    std::vector<double> fitted_f;      // shape component at design points (x order)
    std::vector<double> objective_trace;
    bool converged = false;

    double objective() const { return objective_trace.back(); }
};

struct AdditiveOptions {
    double tol = 1e-12;      // relative objective decrease
    int max_iters = 5000;
    int restarts = 1;        // extra random initializations for non-convex H
    std::uint64_t restart_seed = 0;
};

/// Joint least squares over (f, h) by cyclic backfitting: each half-step is
/// an exact projection, so the objective trace is non-increasing.
AdditiveFit fit_additive(const BivariateSample& s, ShapeConstraint shape,
                         const HClass& hclass, const AdditiveOptions& opts = {});

/// Fixed-point check: for the isotonic shape, the fitted f must match the
/// min-max formula applied to the partial residuals Y - h(Z). Returns the
/// largest absolute gap over design points.
double partial_residual_audit(const BivariateSample& s, const AdditiveFit& fit);

}  // namespace shaperate
