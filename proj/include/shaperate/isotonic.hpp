#pragma once

#include "shaperate/core.hpp"

namespace shaperate {

struct IsotonicBlock {
    std::size_t start;  // inclusive
    std::size_t end;    // inclusive
    double mean;
    double weight;
};

struct IsotonicFit {
    std::vector<double> fitted;   // non-decreasing, one per design point
    StepFunction extension;       // canonical left-continuous step extension
    std::vector<IsotonicBlock> blocks;
};

/// Weighted isotonic least squares by pool-adjacent-violators, O(n).
/// Default weights are the sample's pooling weights.
IsotonicFit fit_isotonic(const SortedSample& s);
IsotonicFit fit_isotonic(const SortedSample& s, const std::vector<double>& weights);

/// Direct evaluation of the min-max formula
///   min_{v>=j} max_{u<=j} (sum_{i=u}^v w_i y_i) / (sum_{i=u}^v w_i)
/// at position j (0-based). O(n^2); the independent oracle for fit_isotonic.
double minmax_value(const SortedSample& s, std::size_t j);

}  // namespace shaperate
