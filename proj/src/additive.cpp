#include "shaperate/additive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace shaperate {

void BivariateSample::validate() const {
    if (xs.empty() || xs.size() != ys.size() || xs.size() != zs.size())
        throw std::invalid_argument("BivariateSample: length mismatch");
    for (double x : xs)
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("BivariateSample: x outside [0,1]");
    for (double z : zs)
        if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("BivariateSample: z outside [0,1]");
}

HClass HClass::affine_bounded() { return HClass{Kind::AffineBounded, 0, 1.0, false}; }

HClass HClass::binned_sieve(int bins, double bound) {
    if (bins < 1) throw std::invalid_argument("binned_sieve: bins must be >= 1");
    return HClass{Kind::BinnedSieve, bins, bound, false};
}

HClass HClass::centered_interval_indicators(int grid) {
    if (grid < 2) throw std::invalid_argument("centered_interval_indicators: grid must be >= 2");
    return HClass{Kind::CenteredIntervalIndicators, grid, 1.0, false};
}

HClass HClass::zero() {
    HClass h = affine_bounded();
    h.degenerate_zero = true;
    return h;
}

double HFit::operator()(double z) const {
    if (spec.degenerate_zero) return 0.0;
    double raw = 0.0;
    switch (spec.kind) {
        case HClass::Kind::AffineBounded:
            raw = beta * (z - 0.5);
            break;
        case HClass::Kind::BinnedSieve: {
            int g = std::min(static_cast<int>(z * spec.grid), spec.grid - 1);
            raw = bin_values.empty() ? 0.0 : bin_values[g];
            break;
        }
        case HClass::Kind::CenteredIntervalIndicators: {
            double len = b - a;
            raw = ((z >= a && z <= b) ? 1.0 : 0.0) - len;
            break;
        }
    }
    return raw - center_offset;
}

namespace {

// Exact projection of the residuals q (indexed like zs) onto the family,
// before centering.
HFit project_h(const HClass& spec, const std::vector<double>& zs,
               const std::vector<double>& q) {
    HFit h;
    h.spec = spec;
    const std::size_t n = zs.size();
    if (spec.degenerate_zero) return h;

    switch (spec.kind) {
        case HClass::Kind::AffineBounded: {
            // project onto the empirically centered covariate: the fitted
            // member is recentered afterwards, so the effective regressor is
            // z - mean(z), not z - 1/2
            double zbar = 0.0;
            for (double z : zs) zbar += z;
            zbar /= static_cast<double>(n);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double c = zs[i] - zbar;
                num += q[i] * c;
                den += c * c;
            }
            h.beta = den > 0 ? std::clamp(num / den, -1.0, 1.0) : 0.0;
            break;
        }
        case HClass::Kind::BinnedSieve: {
            std::vector<double> sum(spec.grid, 0.0);
            std::vector<int> cnt(spec.grid, 0);
            for (std::size_t i = 0; i < n; ++i) {
                int g = std::min(static_cast<int>(zs[i] * spec.grid), spec.grid - 1);
                sum[g] += q[i];
                ++cnt[g];
            }
            h.bin_values.resize(spec.grid);
            for (int g = 0; g < spec.grid; ++g)
                h.bin_values[g] =
                    cnt[g] > 0 ? std::clamp(sum[g] / cnt[g], -spec.bound, spec.bound) : 0.0;
            break;
        }
        case HClass::Kind::CenteredIntervalIndicators: {
            // minimize sum (q - h)^2 over grid endpoint pairs, via prefix sums
            // on the z-sorted residuals
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(),
                      [&](std::size_t i, std::size_t j) { return zs[i] < zs[j]; });
            std::vector<double> zsorted(n), qpre(n + 1, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                zsorted[k] = zs[order[k]];
                qpre[k + 1] = qpre[k] + q[order[k]];
            }
            double qtot = qpre[n];
            const int G = spec.grid;
            double best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < G; ++i) {
                double a = static_cast<double>(i) / G;
                std::size_t lo = static_cast<std::size_t>(
                    std::lower_bound(zsorted.begin(), zsorted.end(), a) - zsorted.begin());
                for (int j = i + 1; j <= G; ++j) {
                    double b = static_cast<double>(j) / G;
                    std::size_t hi = static_cast<std::size_t>(
                        std::upper_bound(zsorted.begin(), zsorted.end(), b) - zsorted.begin());
                    double cnt = static_cast<double>(hi - lo);
                    double qin = qpre[hi] - qpre[lo];
                    // score = 2 sum(q h) - sum(h^2) for the empirically
                    // centered indicator (the member is recentered after the
                    // fit, which reduces it to 1_[a,b] - cnt/n)
                    double frac = cnt / static_cast<double>(n);
                    double score = 2.0 * (qin - frac * qtot) - cnt * (1.0 - frac);
                    if (score > best) {
                        best = score;
                        h.a = a;
                        h.b = b;
                    }
                }
            }
            break;
        }
    }
    return h;
}

HFit random_member(const HClass& spec, std::mt19937_64& rng) {
    HFit h;
    h.spec = spec;
    if (spec.degenerate_zero) return h;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    switch (spec.kind) {
        case HClass::Kind::AffineBounded:
            h.beta = 2.0 * unif(rng) - 1.0;
            break;
        case HClass::Kind::BinnedSieve:
            h.bin_values.resize(spec.grid);
            for (double& v : h.bin_values) v = spec.bound * (2.0 * unif(rng) - 1.0);
            break;
        case HClass::Kind::CenteredIntervalIndicators: {
            int i = static_cast<int>(unif(rng) * spec.grid);
            int j = i + 1 + static_cast<int>(unif(rng) * (spec.grid - i));
            h.a = static_cast<double>(std::min(i, spec.grid - 1)) / spec.grid;
            h.b = static_cast<double>(std::min(j, spec.grid)) / spec.grid;
            break;
        }
    }
    return h;
}

struct BackfitResult {
    AdditiveFit fit;
};

AdditiveFit backfit_once(const BivariateSample& s, ShapeConstraint shape,
                         const HClass& hclass, const AdditiveOptions& opts, HFit h_init,
                         const std::vector<std::size_t>& xorder) {
    const std::size_t n = s.n();
    AdditiveFit out;
    out.shape = shape;
    out.h = std::move(h_init);

    SortedSample sx;
    sx.xs.resize(n);
    sx.weights.assign(n, 1.0);
    sx.ys.resize(n);
    std::vector<double> zx(n);  // z values in x order
    for (std::size_t k = 0; k < n; ++k) {
        sx.xs[k] = s.xs[xorder[k]];
        zx[k] = s.zs[xorder[k]];
    }

    auto shape_step = [&]() {
        for (std::size_t k = 0; k < n; ++k)
            sx.ys[k] = s.ys[xorder[k]] - out.h(zx[k]);
        if (shape == ShapeConstraint::Isotonic) {
            out.iso = fit_isotonic(sx);
            out.fitted_f = out.iso->fitted;
        } else {
            out.cvx = fit_convex(sx);
            out.fitted_f = out.cvx->fitted;
        }
    };
    auto objective = [&]() {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double r = s.ys[xorder[k]] - out.fitted_f[k] - out.h(zx[k]);
            acc += r * r;
        }
        return acc;
    };

    shape_step();
    out.objective_trace.push_back(objective());

    std::vector<double> q(n);
    for (int it = 0; it < opts.max_iters; ++it) {
        if (hclass.degenerate_zero) {
            out.converged = true;
            break;
        }
        // h-step on the residuals of the shape component (original z order)
        std::vector<double> q_by_z(n);
        for (std::size_t k = 0; k < n; ++k)
            q_by_z[xorder[k]] = s.ys[xorder[k]] - out.fitted_f[k];
        HFit h_new = project_h(hclass, s.zs, q_by_z);
        // empirical recentering; the constant moves into f so the sum f + h
        // (and hence the objective) is unchanged
        double c = 0.0;
        for (double z : s.zs) c += h_new(z);
        c /= static_cast<double>(n);
        h_new.center_offset += c;
        out.h = std::move(h_new);
        for (double& v : out.fitted_f) v += c;
        if (out.iso) {
            for (double& v : out.iso->fitted) v += c;
            for (double& v : out.iso->extension.values) v += c;
            for (auto& b : out.iso->blocks) b.mean += c;
        }
        if (out.cvx) {
            for (double& v : out.cvx->fitted) v += c;
            for (double& v : out.cvx->extension.knot_values) v += c;
        }

        shape_step();
        double obj = objective();
        double prev = out.objective_trace.back();
        out.objective_trace.push_back(std::min(obj, prev));
        if (prev - obj < opts.tol * std::max(1.0, prev)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

AdditiveFit fit_additive(const BivariateSample& s, ShapeConstraint shape,
                         const HClass& hclass, const AdditiveOptions& opts) {
    s.validate();
    if (!(opts.tol > 0.0)) throw std::invalid_argument("fit_additive: tol must be > 0");
    const std::size_t n = s.n();

    std::vector<std::size_t> xorder(n);
    std::iota(xorder.begin(), xorder.end(), 0);
    std::stable_sort(xorder.begin(), xorder.end(),
                     [&](std::size_t a, std::size_t b) { return s.xs[a] < s.xs[b]; });

    HFit zero_init;
    zero_init.spec = hclass;
    if (hclass.kind == HClass::Kind::BinnedSieve)
        zero_init.bin_values.assign(hclass.grid, 0.0);
    if (hclass.kind == HClass::Kind::CenteredIntervalIndicators) {
        zero_init.a = 0.0;
        zero_init.b = 1.0;  // h = 1 - 1 = 0: the neutral member
    }

    AdditiveFit best = backfit_once(s, shape, hclass, opts, zero_init, xorder);
    std::mt19937_64 rng(opts.restart_seed ^ 0x5851f42d4c957f2dULL);
    for (int r = 1; r < opts.restarts; ++r) {
        AdditiveFit cand =
            backfit_once(s, shape, hclass, opts, random_member(hclass, rng), xorder);
        if (cand.objective() < best.objective()) best = std::move(cand);
    }
    return best;
}

double partial_residual_audit(const BivariateSample& s, const AdditiveFit& fit) {
    const std::size_t n = s.n();
    std::vector<std::size_t> xorder(n);
    std::iota(xorder.begin(), xorder.end(), 0);
    std::stable_sort(xorder.begin(), xorder.end(),
                     [&](std::size_t a, std::size_t b) { return s.xs[a] < s.xs[b]; });

    SortedSample sx;
    sx.xs.resize(n);
    sx.ys.resize(n);
    sx.weights.assign(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        sx.xs[k] = s.xs[xorder[k]];
        sx.ys[k] = s.ys[xorder[k]] - fit.h(s.zs[xorder[k]]);
    }

    if (fit.shape == ShapeConstraint::Isotonic) {
        double gap = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            gap = std::max(gap, std::abs(fit.fitted_f[j] - minmax_value(sx, j)));
        return gap;
    }
    // convex shape: the cumulative-sum characterization on partial residuals
    ConvexFit proxy;
    proxy.fitted = fit.fitted_f;
    if (fit.cvx) proxy.kinks = fit.cvx->kinks;
    ConvexAudit a = characterization_audit(sx, proxy);
    return std::max(-a.max_violation, a.max_kink_gap);
}

}  // namespace shaperate
