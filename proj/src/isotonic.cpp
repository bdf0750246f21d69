#include "shaperate/isotonic.hpp"

#include <limits>

namespace shaperate {

IsotonicFit fit_isotonic(const SortedSample& s) { return fit_isotonic(s, s.weights); }

IsotonicFit fit_isotonic(const SortedSample& s, const std::vector<double>& weights) {
    const std::size_t n = s.n();
    if (weights.size() != n) throw std::invalid_argument("fit_isotonic: weights length mismatch");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("fit_isotonic: non-positive weight");

    std::vector<IsotonicBlock> st;
    st.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        IsotonicBlock b{i, i, s.ys[i], weights[i]};
        while (!st.empty() && st.back().mean >= b.mean) {
            const IsotonicBlock& p = st.back();
            double tw = p.weight + b.weight;
            b = IsotonicBlock{p.start, b.end, (p.mean * p.weight + b.mean * b.weight) / tw, tw};
            st.pop_back();
        }
        st.push_back(b);
    }

    IsotonicFit fit;
    fit.blocks = std::move(st);
    fit.fitted.resize(n);
    for (const IsotonicBlock& b : fit.blocks)
        for (std::size_t i = b.start; i <= b.end; ++i) fit.fitted[i] = b.mean;

    // canonical left-continuous step extension: f = fitted[i] on (X_{i-1}, X_i],
    // so jumps sit at the design points and f(X_i) = fitted[i]; the leftmost
    // piece carries the value at X_1 and the rightmost extends to 1
    StepFunction ext;
    ext.isotonic = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (fit.fitted[i + 1] != fit.fitted[i] && s.xs[i] > 0.0 && s.xs[i] < 1.0) {
            ext.breakpoints.push_back(s.xs[i]);
            ext.values.push_back(fit.fitted[i]);
        }
    }
    ext.breakpoints.push_back(1.0);
    ext.values.push_back(fit.fitted[n - 1]);
    fit.extension = std::move(ext);
    return fit;
}

double minmax_value(const SortedSample& s, std::size_t j) {
    const std::size_t n = s.n();
    if (j >= n) throw std::out_of_range("minmax_value: index out of range");
    std::vector<double> pw(n + 1, 0.0), py(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        pw[i + 1] = pw[i] + s.weights[i];
        py[i + 1] = py[i] + s.weights[i] * s.ys[i];
    }
    double result = std::numeric_limits<double>::infinity();
    for (std::size_t v = j; v < n; ++v) {
        double inner = -std::numeric_limits<double>::infinity();
        // max over u <= j of the weighted average of y_u..y_v
        for (std::size_t u = 0; u <= j; ++u)
            inner = std::max(inner, (py[v + 1] - py[u]) / (pw[v + 1] - pw[u]));
        result = std::min(result, inner);
    }
    return result;
}

}  // namespace shaperate
