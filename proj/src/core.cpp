#include "shaperate/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace shaperate {

SortedSample make_sorted_sample(const std::vector<double>& xs_raw,
                                const std::vector<double>& ys_raw) {
    if (xs_raw.empty()) throw std::invalid_argument("make_sorted_sample: empty input");
    if (xs_raw.size() != ys_raw.size())
        throw std::invalid_argument("make_sorted_sample: length mismatch");
    for (double x : xs_raw)
        if (!(x >= 0.0 && x <= 1.0))
            throw std::invalid_argument("make_sorted_sample: x outside [0,1]");

    std::vector<std::size_t> order(xs_raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return xs_raw[a] < xs_raw[b]; });

    SortedSample s;
    for (std::size_t k : order) {
        if (!s.xs.empty() && xs_raw[k] == s.xs.back()) {
            // pool exact duplicates: weighted mean response
            double w = s.weights.back();
            s.ys.back() = (s.ys.back() * w + ys_raw[k]) / (w + 1.0);
            s.weights.back() = w + 1.0;
        } else {
            s.xs.push_back(xs_raw[k]);
            s.ys.push_back(ys_raw[k]);
            s.weights.push_back(1.0);
        }
    }
    return s;
}

double StepFunction::operator()(double x) const {
    if (x <= 0.0) return values.front();
    // piece j covers (b_{j-1}, b_j]
    auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), x);
    if (it == breakpoints.end()) return values.back();
    return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

void StepFunction::validate() const {
    if (breakpoints.empty() || breakpoints.size() != values.size())
        throw std::invalid_argument("StepFunction: size mismatch");
    if (breakpoints.back() != 1.0)
        throw std::invalid_argument("StepFunction: last breakpoint must be 1");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw std::invalid_argument("StepFunction: breakpoints not increasing");
    if (isotonic)
        for (std::size_t i = 0; i + 1 < values.size(); ++i)
            if (values[i] > values[i + 1])
                throw std::invalid_argument("StepFunction: isotonic flag violated");
}

double PiecewiseLinearFunction::operator()(double x) const {
    if (x <= knots.front()) {
        if (knots.size() == 1) return knot_values.front();
    }
    auto it = std::upper_bound(knots.begin(), knots.end(), x);
    std::size_t j = static_cast<std::size_t>(it - knots.begin());
    if (j == 0) j = 1;
    if (j >= knots.size()) j = knots.size() - 1;
    double x0 = knots[j - 1], x1 = knots[j];
    double t = (x - x0) / (x1 - x0);
    return knot_values[j - 1] * (1.0 - t) + knot_values[j] * t;
}

void PiecewiseLinearFunction::validate() const {
    if (knots.size() < 2 || knots.size() != knot_values.size())
        throw std::invalid_argument("PiecewiseLinearFunction: size mismatch");
    if (knots.front() != 0.0 || knots.back() != 1.0)
        throw std::invalid_argument("PiecewiseLinearFunction: knots must span [0,1]");
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (!(knots[i] < knots[i + 1]))
            throw std::invalid_argument("PiecewiseLinearFunction: knots not increasing");
    if (convex) {
        const double tol = 1e-10;
        double prev = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
            double s = (knot_values[i + 1] - knot_values[i]) / (knots[i + 1] - knots[i]);
            if (s < prev - tol)
                throw std::invalid_argument("PiecewiseLinearFunction: convex flag violated");
            prev = std::max(prev, s);
        }
    }
}

SignalSpec SignalSpec::constant(double c) { return SignalSpec(Kind::Constant, {c}); }

SignalSpec SignalSpec::linear(double intercept, double slope) {
    return SignalSpec(Kind::Linear, {intercept, slope});
}

SignalSpec SignalSpec::step_train(std::vector<double> breakpoints, std::vector<double> values) {
    if (breakpoints.empty() || breakpoints.size() != values.size())
        throw std::invalid_argument("step_train: size mismatch");
    if (breakpoints.back() != 1.0)
        throw std::invalid_argument("step_train: last breakpoint must be 1");
    std::vector<double> p;
    p.push_back(static_cast<double>(breakpoints.size()));
    p.insert(p.end(), breakpoints.begin(), breakpoints.end());
    p.insert(p.end(), values.begin(), values.end());
    return SignalSpec(Kind::StepTrain, std::move(p));
}

SignalSpec SignalSpec::convex_poly(double c0, double c1, double c2) {
    if (c2 < 0.0) throw std::invalid_argument("convex_poly: c2 must be >= 0");
    return SignalSpec(Kind::ConvexPoly, {c0, c1, c2});
}

SignalSpec SignalSpec::custom_grid(std::vector<double> values) {
    if (values.size() < 2) throw std::invalid_argument("custom_grid: need >= 2 values");
    return SignalSpec(Kind::CustomGrid, std::move(values));
}

double SignalSpec::operator()(double x) const {
    switch (kind_) {
        case Kind::Constant:
            return params_[0];
        case Kind::Linear:
            return params_[0] + params_[1] * x;
        case Kind::StepTrain: {
            std::size_t k = static_cast<std::size_t>(params_[0]);
            const double* breaks = params_.data() + 1;
            const double* vals = params_.data() + 1 + k;
            if (x <= 0.0) return vals[0];
            auto it = std::lower_bound(breaks, breaks + k, x);
            if (it == breaks + k) return vals[k - 1];
            return vals[it - breaks];
        }
        case Kind::ConvexPoly:
            return params_[0] + x * (params_[1] + x * params_[2]);
        case Kind::CustomGrid: {
            std::size_t k = params_.size();
            double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(k - 1);
            std::size_t j = std::min(static_cast<std::size_t>(pos), k - 2);
            double t = pos - static_cast<double>(j);
            return params_[j] * (1.0 - t) + params_[j + 1] * t;
        }
    }
    return 0.0;
}

std::vector<double> SignalSpec::partition() const {
    std::vector<double> cuts = {0.0, 1.0};
    if (kind_ == Kind::StepTrain) {
        std::size_t k = static_cast<std::size_t>(params_[0]);
        cuts.insert(cuts.end(), params_.begin() + 1, params_.begin() + 1 + k);
    } else if (kind_ == Kind::CustomGrid) {
        std::size_t k = params_.size();
        for (std::size_t j = 1; j + 1 < k; ++j)
            cuts.push_back(static_cast<double>(j) / static_cast<double>(k - 1));
    }
    return detail::merge_cuts(std::move(cuts));
}

namespace detail {

namespace {
// 16-point Gauss-Legendre abscissas/weights on [-1,1]
constexpr std::array<double, 8> kGlX = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGlW = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
}  // namespace

double gauss_legendre_16(const std::function<double(double)>& h, double a, double b) {
    double c = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 8; ++i)
        acc += kGlW[i] * (h(c - half * kGlX[i]) + h(c + half * kGlX[i]));
    return acc * half;
}

std::vector<double> merge_cuts(std::vector<double> cuts) {
    cuts.push_back(0.0);
    cuts.push_back(1.0);
    for (double& c : cuts) c = std::clamp(c, 0.0, 1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               cuts.end());
    return cuts;
}

}  // namespace detail

double l2_sq_distance(const std::function<double(double)>& a,
                      const std::function<double(double)>& b,
                      std::vector<double> cuts) {
    cuts = detail::merge_cuts(std::move(cuts));
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        // evaluate at left-open midpoint convention: sample strictly inside
        total += detail::gauss_legendre_16(
            [&](double x) {
                double d = a(x) - b(x);
                return d * d;
            },
            lo, hi);
    }
    return total;
}

namespace {

std::vector<double> step_cuts(const StepFunction& f) {
    std::vector<double> c = f.breakpoints;
    c.push_back(0.0);
    return c;
}

std::vector<double> pwl_cuts(const PiecewiseLinearFunction& f) { return f.knots; }

}  // namespace

double l2_loss(const StepFunction& f, const SignalSpec& g) {
    std::vector<double> cuts = step_cuts(f);
    auto gp = g.partition();
    cuts.insert(cuts.end(), gp.begin(), gp.end());
    return l2_sq_distance([&](double x) { return f(x); }, [&](double x) { return g(x); },
                          std::move(cuts));
}

double l2_loss(const PiecewiseLinearFunction& f, const SignalSpec& g) {
    std::vector<double> cuts = pwl_cuts(f);
    auto gp = g.partition();
    cuts.insert(cuts.end(), gp.begin(), gp.end());
    return l2_sq_distance([&](double x) { return f(x); }, [&](double x) { return g(x); },
                          std::move(cuts));
}

double l2_loss(const StepFunction& f, const StepFunction& g) {
    std::vector<double> cuts = step_cuts(f);
    auto gc = step_cuts(g);
    cuts.insert(cuts.end(), gc.begin(), gc.end());
    return l2_sq_distance([&](double x) { return f(x); }, [&](double x) { return g(x); },
                          std::move(cuts));
}

double l2_loss(const PiecewiseLinearFunction& f, const PiecewiseLinearFunction& g) {
    std::vector<double> cuts = pwl_cuts(f);
    auto gc = pwl_cuts(g);
    cuts.insert(cuts.end(), gc.begin(), gc.end());
    return l2_sq_distance([&](double x) { return f(x); }, [&](double x) { return g(x); },
                          std::move(cuts));
}

double l2_loss(const StepFunction& f, const PiecewiseLinearFunction& g) {
    std::vector<double> cuts = step_cuts(f);
    auto gc = pwl_cuts(g);
    cuts.insert(cuts.end(), gc.begin(), gc.end());
    return l2_sq_distance([&](double x) { return f(x); }, [&](double x) { return g(x); },
                          std::move(cuts));
}

namespace {

// Per-cell integrals of g, x*g, g^2, x, x^2 on the equispaced grid, by
// 16-node Gauss-Legendre (exact for the polynomial signals in use).
struct GridMoments {
    // prefix sums over cells, size G+1, index j = integral over [0, j/G]
    std::vector<double> g, xg, g2, one, x, x2;
    int G;

    explicit GridMoments(const SignalSpec& sig, int grid_size) : G(grid_size) {
        g.assign(G + 1, 0.0);
        xg.assign(G + 1, 0.0);
        g2.assign(G + 1, 0.0);
        one.assign(G + 1, 0.0);
        x.assign(G + 1, 0.0);
        x2.assign(G + 1, 0.0);
        for (int j = 0; j < G; ++j) {
            double a = static_cast<double>(j) / G, b = static_cast<double>(j + 1) / G;
            g[j + 1] = g[j] + detail::gauss_legendre_16([&](double t) { return sig(t); }, a, b);
            xg[j + 1] =
                xg[j] + detail::gauss_legendre_16([&](double t) { return t * sig(t); }, a, b);
            g2[j + 1] = g2[j] + detail::gauss_legendre_16(
                                    [&](double t) {
                                        double v = sig(t);
                                        return v * v;
                                    },
                                    a, b);
            one[j + 1] = one[j] + (b - a);
            x[j + 1] = x[j] + 0.5 * (b * b - a * a);
            x2[j + 1] = x2[j] + (b * b * b - a * a * a) / 3.0;
        }
    }

    // best-constant squared error on (i/G, j/G]
    double cost_const(int i, int j, double* mean = nullptr) const {
        double len = one[j] - one[i];
        double m0 = g[j] - g[i];
        double q = g2[j] - g2[i];
        double c = m0 / len;
        if (mean) *mean = c;
        return std::max(0.0, q - m0 * m0 / len);
    }

    // best-line squared error on (i/G, j/G]; out: intercept a and slope b
    double cost_linear(int i, int j, double* ca = nullptr, double* cb = nullptr) const {
        double s0 = one[j] - one[i], s1 = x[j] - x[i], s2 = x2[j] - x2[i];
        double m0 = g[j] - g[i], m1 = xg[j] - xg[i];
        double det = s0 * s2 - s1 * s1;
        double a, b;
        if (det <= 1e-16 * s0 * s2 + 1e-300) {
            a = m0 / s0;
            b = 0.0;
        } else {
            a = (s2 * m0 - s1 * m1) / det;
            b = (s0 * m1 - s1 * m0) / det;
        }
        if (ca) *ca = a;
        if (cb) *cb = b;
        double q = g2[j] - g2[i];
        return std::max(0.0, q - (a * m0 + b * m1));
    }
};

// Weighted PAVA used by the convexity repair (non-decreasing projection).
std::vector<double> pava_nondecreasing(const std::vector<double>& v,
                                       const std::vector<double>& w) {
    struct Block {
        double mean, weight;
        int count;
    };
    std::vector<Block> st;
    for (std::size_t i = 0; i < v.size(); ++i) {
        Block b{v[i], w[i], 1};
        while (!st.empty() && st.back().mean > b.mean + 0.0) {
            Block& p = st.back();
            double tw = p.weight + b.weight;
            b = Block{(p.mean * p.weight + b.mean * b.weight) / tw, tw, p.count + b.count};
            st.pop_back();
        }
        st.push_back(b);
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const Block& b : st)
        for (int k = 0; k < b.count; ++k) out.push_back(b.mean);
    return out;
}

}  // namespace

MPieceApproximation best_m_piece_approximation(const SignalSpec& g, int m,
                                               PieceFamily family, int grid_size) {
    if (m < 1) throw std::invalid_argument("best_m_piece_approximation: m must be >= 1");
    if (grid_size < 64)
        throw std::invalid_argument("best_m_piece_approximation: grid_size must be >= 64");
    if (m > grid_size)
        throw std::invalid_argument("best_m_piece_approximation: m > grid_size");

    const int G = grid_size;
    GridMoments mom(g, G);

    const double inf = std::numeric_limits<double>::infinity();
    // E[k][j]: best error covering (0, j/G] with k pieces
    std::vector<std::vector<double>> E(m + 1, std::vector<double>(G + 1, inf));
    std::vector<std::vector<int>> back(m + 1, std::vector<int>(G + 1, -1));
    E[0][0] = 0.0;
    for (int k = 1; k <= m; ++k) {
        for (int j = k; j <= G; ++j) {
            for (int i = k - 1; i < j; ++i) {
                if (E[k - 1][i] == inf) continue;
                double c = (family == PieceFamily::Constant) ? mom.cost_const(i, j)
                                                             : mom.cost_linear(i, j);
                double tot = E[k - 1][i] + c;
                if (tot < E[k][j]) {
                    E[k][j] = tot;
                    back[k][j] = i;
                }
            }
        }
    }
    // allow fewer than m pieces (at-most-m class): take best over k <= m
    int best_k = 1;
    for (int k = 2; k <= m; ++k)
        if (E[k][G] < E[best_k][G]) best_k = k;

    std::vector<int> bounds;  // grid indices of segment ends, ascending
    {
        int j = G;
        for (int k = best_k; k >= 1; --k) {
            bounds.push_back(j);
            j = back[k][j];
        }
        std::reverse(bounds.begin(), bounds.end());
    }

    MPieceApproximation out;
    out.family = family;
    if (family == PieceFamily::Constant) {
        StepFunction sf;
        int prev = 0;
        for (int j : bounds) {
            double c;
            mom.cost_const(prev, j, &c);
            sf.breakpoints.push_back(static_cast<double>(j) / G);
            sf.values.push_back(c);
            prev = j;
        }
        out.step = std::move(sf);
        out.error2 = E[best_k][G];
        return out;
    }

    // LinearConvex: recover per-segment lines, then enforce convexity.
    std::vector<double> seg_a, seg_b, seg_len;
    {
        int prev = 0;
        for (int j : bounds) {
            double a, b;
            mom.cost_linear(prev, j, &a, &b);
            seg_a.push_back(a);
            seg_b.push_back(b);
            seg_len.push_back(static_cast<double>(j - prev) / G);
            prev = j;
        }
    }
    bool convex_ok = true;
    for (std::size_t s = 0; s + 1 < seg_b.size(); ++s)
        if (seg_b[s] > seg_b[s + 1] + 1e-10) convex_ok = false;
    // also need continuity at the DP joins for a valid convex function
    if (convex_ok && seg_b.size() > 1) {
        int prev = 0;
        for (std::size_t s = 0; s + 1 < seg_b.size(); ++s) {
            double xj = static_cast<double>(bounds[s]) / G;
            double left = seg_a[s] + seg_b[s] * xj;
            double right = seg_a[s + 1] + seg_b[s + 1] * xj;
            if (std::abs(left - right) > 1e-9) convex_ok = false;
            prev = bounds[s];
        }
        (void)prev;
    }

    PiecewiseLinearFunction pwl;
    if (convex_ok) {
        pwl.knots.push_back(0.0);
        pwl.knot_values.push_back(seg_a[0]);
        int prev = 0;
        for (std::size_t s = 0; s < seg_b.size(); ++s) {
            double xj = static_cast<double>(bounds[s]) / G;
            pwl.knots.push_back(xj);
            pwl.knot_values.push_back(seg_a[s] + seg_b[s] * xj);
            prev = bounds[s];
        }
        (void)prev;
        pwl.convex = true;
        pwl.validate();
        out.pwl = std::move(pwl);
        out.error2 = E[best_k][G];
        return out;
    }

    // Repair: pool slopes to non-decreasing, rebuild a continuous convex
    // function from an integrated slope profile, refit the intercept.
    out.convexity_repaired = true;
    std::vector<double> slopes = pava_nondecreasing(seg_b, seg_len);
    std::vector<double> knots = {0.0};
    for (int j : bounds) knots.push_back(static_cast<double>(j) / G);
    // F(x) = integral of slope from 0 to x (zero intercept for now)
    std::vector<double> F(knots.size(), 0.0);
    for (std::size_t s = 0; s < slopes.size(); ++s)
        F[s + 1] = F[s] + slopes[s] * (knots[s + 1] - knots[s]);
    PiecewiseLinearFunction base;
    base.knots = knots;
    base.knot_values = F;
    // optimal intercept c minimizes int (c + F - g)^2 => c = int(g - F)
    double c = 0.0;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s)
        c += detail::gauss_legendre_16([&](double t) { return g(t) - base(t); }, knots[s],
                                       knots[s + 1]);
    for (double& v : base.knot_values) v += c;
    base.convex = true;
    base.validate();
    out.error2 = l2_loss(base, g);
    out.pwl = std::move(base);
    return out;
}

}  // namespace shaperate
