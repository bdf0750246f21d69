#pragma once

#include "shaperate/core.hpp"

namespace shaperate {

struct ConvexFit {
    std::vector<double> fitted;        // one per design point
    std::vector<std::size_t> kinks;    // indices where the slope changes
    PiecewiseLinearFunction extension; // kinked interpolant, linear continuation at the ends
    double residual_norm = 0.0;        // sqrt of weighted residual sum of squares
};

/// Convex least squares: weighted projection of the responses onto the cone
/// of sequences with non-decreasing divided slopes, by a primal active-set
/// method on the second-divided-difference constraints.
ConvexFit fit_convex(const SortedSample& s);

struct ConvexAudit {
    double max_violation = 0.0;   // most negative cumulative-inequality slack
    double max_kink_gap = 0.0;    // largest |equality gap| over kink indices
};

/// Cumulative-sum characterization check: with R_k the partial sums of the
/// fit and S_k of the responses, sum_{k<j} R_k (X_{k+1}-X_k) must dominate
/// the same sum of S_k at every j, with equality exactly off the kink set.
ConvexAudit characterization_audit(const SortedSample& s, const ConvexFit& fit);

/// Exhaustive active-set enumeration oracle, n <= 12.
ConvexFit brute_force_convex(const SortedSample& s);

}  // namespace shaperate
