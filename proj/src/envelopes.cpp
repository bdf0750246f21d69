#include "shaperate/envelopes.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

namespace shaperate {

double envelope_norm(EnvelopeModel model, double delta, double bound) {
    if (!(delta > 0.0)) throw std::invalid_argument("envelope_norm: delta must be > 0");
    switch (model) {
        case EnvelopeModel::IsotonicBounded:
        case EnvelopeModel::ConvexBounded: {
            if (!(bound > 0.0)) throw std::invalid_argument("envelope_norm: bound must be > 0");
            const double c = model == EnvelopeModel::IsotonicBounded ? 1.0 : 2.0 * std::sqrt(3.0);
            const double u = c * delta;
            // envelope (u (x^{-1/2} v (1-x)^{-1/2})) ^ B; fully saturated when
            // the midpoint value u*sqrt(2) already exceeds B
            if (u * u * 2.0 >= bound * bound) return bound;
            double norm2 = 2.0 * u * u * (1.0 + std::log(bound * bound / (2.0 * u * u)));
            return std::sqrt(norm2);
        }
        case EnvelopeModel::Linear1d:
            return delta;
        case EnvelopeModel::SingleChangepoint:
            return std::min(delta, 1.0);
        case EnvelopeModel::MultiChangepoint:
            return 1.0;
    }
    return 0.0;
}

std::pair<double, double> fit_gamma(const std::vector<double>& deltas,
                                    const std::vector<double>& norms) {
    if (deltas.size() != norms.size() || deltas.size() < 4)
        throw std::invalid_argument("fit_gamma: need >= 4 (delta, norm) pairs");
    double dmin = deltas[0], dmax = deltas[0];
    for (double d : deltas) {
        if (!(d > 0.0 && d < 1.0))
            throw std::invalid_argument("fit_gamma: deltas must lie in (0,1)");
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    if (dmax / dmin < 99.0)
        throw std::invalid_argument("fit_gamma: delta grid must span >= 2 decades");

    const std::size_t n = deltas.size();
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(norms[i] > 0.0)) throw std::invalid_argument("fit_gamma: non-positive norm");
        X(i, 0) = 1.0;
        X(i, 1) = std::log(deltas[i]);
        X(i, 2) = std::log(std::log(1.0 / deltas[i]));
        y(i) = std::log(norms[i]);
    }
    Eigen::Vector3d beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    // log norm = log c + gamma log delta + tau log log(1/delta)
    double gamma = std::clamp(beta(1), 0.0, 1.0);
    double tau = beta(2);
    return {gamma, tau};
}

EnvelopeProfile envelope_profile(EnvelopeModel model, const std::vector<double>& deltas,
                                 double bound) {
    EnvelopeProfile p;
    p.deltas = deltas;
    p.norms.reserve(deltas.size());
    for (double d : deltas) p.norms.push_back(envelope_norm(model, d, bound));
    auto [g, t] = fit_gamma(p.deltas, p.norms);
    p.gamma_hat = g;
    p.log_correction = t;
    return p;
}

double predicted_rate_exponent(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("predicted_rate_exponent: gamma outside [0,1]");
    return 1.0 / (2.0 * (2.0 - gamma));
}

TreeClass build_tree_class(double gamma, int max_level, TreeChildSelector selector,
                           std::uint64_t seed) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("build_tree_class: gamma must lie in (0,1)");
    if (max_level < 1) throw std::invalid_argument("build_tree_class: max_level must be >= 1");
    const double inv = 1.0 / (1.0 - gamma);
    if (static_cast<double>(max_level) * inv > 1000.0)
        throw std::invalid_argument("build_tree_class: level overflow (lengths below precision)");

    TreeClass t;
    t.gamma = gamma;
    t.base = std::exp2(inv);
    const int capacity = static_cast<int>(std::floor(t.base));
    // capacity >= 2 holds for every gamma in (0,1) since base > 2

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto pick_children = [&](int cap) -> std::pair<int, int> {
        if (selector == TreeChildSelector::Leftmost) return {0, 1};
        std::uniform_int_distribution<int> d(0, cap - 1);
        int a = d(rng), b = d(rng);
        while (b == a) b = d(rng);
        if (a > b) std::swap(a, b);
        return {a, b};
    };

    std::vector<TreeInterval> parents = {{0.0, 1.0}};
    for (int l = 1; l <= max_level; ++l) {
        double child_len = std::exp2(-static_cast<double>(l) * inv);
        std::vector<TreeInterval> level;
        level.reserve(parents.size() * 2);
        for (const TreeInterval& p : parents) {
            auto [a, b] = pick_children(capacity);
            level.push_back({p.start + a * child_len, child_len});
            level.push_back({p.start + b * child_len, child_len});
        }
        t.levels.push_back(level);
        parents = t.levels.back();
    }
    return t;
}

namespace {

// smallest level l >= 1 whose interval length base^{-l} is <= delta^2
int critical_level(const TreeClass& t, double delta) {
    const double inv = 1.0 / (1.0 - t.gamma);
    double d2 = delta * delta;
    int l = std::max(
        1, static_cast<int>(std::ceil(2.0 * std::log2(1.0 / delta) * (1.0 - t.gamma) - 1e-12)));
    while (std::exp2(-static_cast<double>(l) * inv) > d2) ++l;
    while (l > 1 && std::exp2(-static_cast<double>(l - 1) * inv) <= d2) --l;
    return l;
}

}  // namespace

double tree_envelope_norm(const TreeClass& t, double delta, bool* truncated) {
    if (!(delta > 0.0)) throw std::invalid_argument("tree_envelope_norm: delta must be > 0");
    const double inv = 1.0 / (1.0 - t.gamma);
    int l = critical_level(t, delta);
    bool trunc = l > static_cast<int>(t.levels.size());
    if (trunc) l = static_cast<int>(t.levels.size());
    if (truncated) *truncated = trunc;
    // union of the 2^l disjoint critical-level intervals:
    // norm^2 = 2^l * base^{-l}
    return std::sqrt(std::exp2(static_cast<double>(l) * (1.0 - inv)));
}

double tree_envelope_check(const TreeClass& t, const std::vector<double>& deltas) {
    double worst = 0.0;
    for (double d : deltas) {
        bool trunc = false;
        double norm = tree_envelope_norm(t, d, &trunc);
        if (trunc) continue;
        worst = std::max(worst, norm / std::pow(d, t.gamma));
    }
    return worst;
}

}  // namespace shaperate
