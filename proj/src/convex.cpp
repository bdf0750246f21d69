#include "shaperate/convex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace shaperate {

namespace {

// Second-divided-difference constraint rows, normalized to unit norm.
// Row c touches coordinates c, c+1, c+2; a_c^T f >= 0 encodes slope
// monotonicity between the segments meeting at X_{c+1}.
struct ConstraintRows {
    std::vector<double> e0, e1, e2;  // entries at c, c+1, c+2

    explicit ConstraintRows(const std::vector<double>& xs) {
        std::size_t m = xs.size() >= 2 ? xs.size() - 2 : 0;
        e0.resize(m);
        e1.resize(m);
        e2.resize(m);
        for (std::size_t c = 0; c < m; ++c) {
            double hl = xs[c + 1] - xs[c], hr = xs[c + 2] - xs[c + 1];
            double a0 = 1.0 / hl, a2 = 1.0 / hr, a1 = -a0 - a2;
            double nrm = std::sqrt(a0 * a0 + a1 * a1 + a2 * a2);
            e0[c] = a0 / nrm;
            e1[c] = a1 / nrm;
            e2[c] = a2 / nrm;
        }
    }

    std::size_t count() const { return e0.size(); }

    double dot(std::size_t c, const std::vector<double>& f) const {
        return e0[c] * f[c] + e1[c] * f[c + 1] + e2[c] * f[c + 2];
    }
};

// Solve the equality-constrained projection for working set ws (sorted).
// An active row pins a second divided difference to zero, so over each block
// of working rows whose index gaps are at most 2 the solution is a
// continuous broken line with kinks exactly at the skipped positions.
// Fitting that broken line in the nodal (hat function) basis gives
// tridiagonal normal equations whose diagonal dominates because every node
// is itself a data point; this stays well conditioned even at
// near-coincident design points, where the Gram system of the constraint
// rows is numerically singular. Coordinates outside every block are free
// and keep their data values.
void solve_eqp(const ConstraintRows& rows, const SortedSample& s,
               const std::vector<std::size_t>& ws,
               std::vector<double>& mu, std::vector<double>& f) {
    const std::size_t m = ws.size();
    f = s.ys;
    mu.assign(m, 0.0);

    std::vector<std::size_t> nodes;
    std::vector<double> diag, off, rhs, val;
    std::size_t p = 0;
    while (p < m) {
        std::size_t q = p;
        while (q + 1 < m && ws[q + 1] <= ws[q] + 2) ++q;
        const std::size_t c0 = ws[p], c1 = ws[q] + 2;  // coordinate span

        nodes.clear();
        nodes.push_back(c0);
        for (std::size_t j = p; j < q; ++j)
            if (ws[j + 1] == ws[j] + 2) nodes.push_back(ws[j + 1]);
        nodes.push_back(c1);
        const std::size_t nk = nodes.size();

        diag.assign(nk, 0.0);
        off.assign(nk - 1, 0.0);
        rhs.assign(nk, 0.0);
        std::size_t k = 0;
        for (std::size_t i = c0; i <= c1; ++i) {
            while (k + 2 < nk && nodes[k + 1] < i) ++k;
            double t = (s.xs[i] - s.xs[nodes[k]]) / (s.xs[nodes[k + 1]] - s.xs[nodes[k]]);
            double w = s.weights[i], a = 1.0 - t;
            diag[k] += w * a * a;
            diag[k + 1] += w * t * t;
            off[k] += w * a * t;
            rhs[k] += w * a * s.ys[i];
            rhs[k + 1] += w * t * s.ys[i];
        }

        // tridiagonal elimination; pivots never vanish since each node
        // carries its own data point
        for (std::size_t t = 1; t < nk; ++t) {
            double l = off[t - 1] / diag[t - 1];
            diag[t] -= l * off[t - 1];
            rhs[t] -= l * rhs[t - 1];
        }
        val.assign(nk, 0.0);
        val[nk - 1] = rhs[nk - 1] / diag[nk - 1];
        for (std::size_t t = nk - 1; t-- > 0;)
            val[t] = (rhs[t] - off[t] * val[t + 1]) / diag[t];

        k = 0;
        for (std::size_t i = c0; i <= c1; ++i) {
            while (k + 2 < nk && nodes[k + 1] < i) ++k;
            double t = (s.xs[i] - s.xs[nodes[k]]) / (s.xs[nodes[k + 1]] - s.xs[nodes[k]]);
            f[i] = (1.0 - t) * val[k] + t * val[k + 1];
        }

        // multipliers by forward substitution in W(f - y) = A^T mu; only the
        // first rows of each block are needed, the trailing equations are
        // implied by stationarity
        double prev1 = 0.0, prev2 = 0.0;
        for (std::size_t j = p; j <= q; ++j) {
            const std::size_t c = ws[j];
            double r = s.weights[c] * (f[c] - s.ys[c]);
            if (j > p) {
                if (ws[j - 1] == c - 1) r -= rows.e1[c - 1] * prev1;
                else r -= rows.e2[c - 2] * prev1;
            }
            if (j > p + 1 && ws[j - 2] == c - 2) r -= rows.e2[c - 2] * prev2;
            double cur = r / rows.e0[c];
            mu[j] = cur;
            prev2 = prev1;
            prev1 = cur;
        }

        p = q + 1;
    }
}

ConvexFit finalize_fit(const SortedSample& s, std::vector<double> fitted) {
    const std::size_t n = s.n();
    ConvexFit fit;
    fit.fitted = std::move(fitted);

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = s.ys[i] - fit.fitted[i];
        rss += s.weights[i] * r * r;
    }
    fit.residual_norm = std::sqrt(rss);

    std::vector<double> slopes(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        slopes[i] = (fit.fitted[i + 1] - fit.fitted[i]) / (s.xs[i + 1] - s.xs[i]);
    // a slope change only counts as a kink when the unit-normalized second
    // divided difference clears the solver tolerance; the raw slope gap blows
    // up at near-coincident design points where the constraint is active
    double yscale = 1.0;
    for (double y : s.ys) yscale = std::max(yscale, std::abs(y));
    const double kink_tol = 1e-7 * yscale;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        double a0 = 1.0 / (s.xs[i + 1] - s.xs[i]);
        double a2 = 1.0 / (s.xs[i + 2] - s.xs[i + 1]);
        double a1 = -a0 - a2;
        double nrm = std::sqrt(a0 * a0 + a1 * a1 + a2 * a2);
        if ((slopes[i + 1] - slopes[i]) / nrm > kink_tol) fit.kinks.push_back(i + 1);
    }

    PiecewiseLinearFunction ext;
    if (s.xs.front() > 0.0) {
        ext.knots.push_back(0.0);
        ext.knot_values.push_back(fit.fitted.front() - slopes.front() * s.xs.front());
    }
    for (std::size_t i = 0; i < n; ++i) {
        ext.knots.push_back(s.xs[i]);
        ext.knot_values.push_back(fit.fitted[i]);
    }
    if (s.xs.back() < 1.0) {
        ext.knots.push_back(1.0);
        ext.knot_values.push_back(fit.fitted.back() + slopes.back() * (1.0 - s.xs.back()));
    }
    ext.convex = true;
    fit.extension = std::move(ext);
    return fit;
}

}  // namespace

ConvexFit fit_convex(const SortedSample& s) {
    const std::size_t n = s.n();
    if (n < 2) throw std::invalid_argument("fit_convex: need n >= 2");
    if (n == 2) return finalize_fit(s, s.ys);

    ConstraintRows rows(s.xs);
    const std::size_t m_all = rows.count();
    double yscale = 1.0;
    for (double y : s.ys) yscale = std::max(yscale, std::abs(y));
    const double feas_tol = 1e-11 * yscale;
    const double mu_tol = 1e-11 * yscale;

    // start from the affine weighted least squares fit: feasible, all
    // constraints active
    std::vector<double> f_cur(n);
    {
        double sw = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double w = s.weights[i];
            sw += w;
            sx += w * s.xs[i];
            sxx += w * s.xs[i] * s.xs[i];
            sy += w * s.ys[i];
            sxy += w * s.xs[i] * s.ys[i];
        }
        double det = sw * sxx - sx * sx;
        double b = det > 0 ? (sw * sxy - sx * sy) / det : 0.0;
        double a = (sy - b * sx) / sw;
        for (std::size_t i = 0; i < n; ++i) f_cur[i] = a + b * s.xs[i];
    }

    std::vector<std::size_t> ws(m_all);
    for (std::size_t c = 0; c < m_all; ++c) ws[c] = c;
    std::vector<bool> in_ws(m_all, true);
    std::vector<double> mu, f_star;

    // ill-conditioned clusters of near-coincident points can report garbage
    // multipliers: a constraint gets dropped on a hugely negative mu, only to
    // be violated and re-added at once, indefinitely. A constraint that keeps
    // getting dropped is really active with an unreliable multiplier
    // estimate, so after a few drops it gets pinned in the working set
    std::vector<bool> pinned(m_all, false);
    std::vector<std::uint8_t> drop_count(m_all, 0);

    // degenerate instances can cycle through add/drop pairs; every stall_span
    // iterations the tolerances widen and the drop rule switches to lowest
    // index, which breaks the cycle at a tiny cost in KKT precision
    const std::size_t stall_span = 100 + 4 * n;
    const std::size_t max_iter = 10 * stall_span;
    double tol_scale = 1.0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        if (iter > 0 && iter % stall_span == 0) tol_scale *= 10.0;
        const double feas = feas_tol * tol_scale;
        const double mutol = mu_tol * tol_scale;
        solve_eqp(rows, s, ws, mu, f_star);

        // most violated non-working constraint at the EQP solution
        double worst = 0.0;
        for (std::size_t c = 0; c < m_all; ++c) {
            if (in_ws[c]) continue;
            worst = std::min(worst, rows.dot(c, f_star));
        }

        if (worst >= -feas) {
            f_cur = f_star;
            // KKT multiplier check
            std::size_t drop = m_all;
            double most_neg = -mutol;
            for (std::size_t p = 0; p < ws.size(); ++p) {
                if (pinned[ws[p]]) continue;
                if (mu[p] < most_neg) {
                    drop = ws[p];
                    if (tol_scale > 1.0) break;
                    most_neg = mu[p];
                }
            }
            if (drop == m_all) return finalize_fit(s, std::move(f_cur));
            if (++drop_count[drop] > 3) {
                pinned[drop] = true;
                continue;
            }
            in_ws[drop] = false;
            ws.erase(std::find(ws.begin(), ws.end(), drop));
            continue;
        }

        // partial step toward f_star until the first blocking constraint
        double alpha = 1.0;
        std::size_t block = m_all;
        for (std::size_t c = 0; c < m_all; ++c) {
            if (in_ws[c]) continue;
            double cur = rows.dot(c, f_cur);
            double nxt = rows.dot(c, f_star);
            double d = nxt - cur;
            if (d < -1e-300 && nxt < -feas) {
                double a = std::max(cur, 0.0) / (-d);
                if (a < alpha) {
                    alpha = a;
                    block = c;
                }
            }
        }
        if (block == m_all) {
            // numerically clean: accept the EQP point
            return finalize_fit(s, std::move(f_star));
        }
        for (std::size_t i = 0; i < n; ++i)
            f_cur[i] += alpha * (f_star[i] - f_cur[i]);
        in_ws[block] = true;
        ws.insert(std::upper_bound(ws.begin(), ws.end(), block), block);
    }
    throw std::runtime_error("fit_convex: active-set iteration limit exceeded");
}

ConvexAudit characterization_audit(const SortedSample& s, const ConvexFit& fit) {
    const std::size_t n = s.n();
    if (fit.fitted.size() != n)
        throw std::invalid_argument("characterization_audit: mismatched lengths");
    ConvexAudit audit;
    if (n < 2) return audit;

    std::vector<bool> is_kink(n, false);
    for (std::size_t k : fit.kinks) is_kink[k] = true;

    double slack_min = std::numeric_limits<double>::infinity();
    double kink_gap = 0.0;
    double acc = 0.0;  // running sum of (R_k - S_k)(X_{k+1} - X_k)
    double rk = 0.0, sk = 0.0;
    for (std::size_t j = 2; j <= n; ++j) {
        std::size_t k = j - 2;  // 0-based index of the term added
        rk += fit.fitted[k];
        sk += s.ys[k];
        acc += (rk - sk) * (s.xs[k + 1] - s.xs[k]);
        slack_min = std::min(slack_min, acc);
        if (j - 1 < n && is_kink[j - 1])
            kink_gap = std::max(kink_gap, std::abs(acc));
    }
    audit.max_violation = slack_min;
    audit.max_kink_gap = kink_gap;
    return audit;
}

ConvexFit brute_force_convex(const SortedSample& s) {
    const std::size_t n = s.n();
    if (n < 2) throw std::invalid_argument("brute_force_convex: need n >= 2");
    if (n > 12) throw std::invalid_argument("brute_force_convex: n > 12 rejected");
    if (n == 2) return finalize_fit(s, s.ys);

    ConstraintRows rows(s.xs);
    const std::size_t m_all = rows.count();
    std::vector<double> winv(n);
    for (std::size_t i = 0; i < n; ++i) winv[i] = 1.0 / s.weights[i];

    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<double> best_f;
    for (std::uint32_t mask = 0; mask < (1u << m_all); ++mask) {
        std::vector<std::size_t> ws;
        for (std::size_t c = 0; c < m_all; ++c)
            if (mask & (1u << c)) ws.push_back(c);

        // dense equality-constrained solve
        std::size_t m = ws.size();
        Eigen::MatrixXd M(m, m);
        Eigen::VectorXd rhs(m);
        auto coef = [&](std::size_t c, std::size_t k) -> double {
            if (k == c) return rows.e0[c];
            if (k == c + 1) return rows.e1[c];
            if (k == c + 2) return rows.e2[c];
            return 0.0;
        };
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = 0; q < m; ++q) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += coef(ws[p], k) * winv[k] * coef(ws[q], k);
                M(p, q) = acc;
            }
            double b = 0.0;
            for (std::size_t k = 0; k < n; ++k) b += coef(ws[p], k) * s.ys[k];
            rhs(p) = -b;
        }
        Eigen::VectorXd mu = m > 0 ? M.ldlt().solve(rhs).eval() : Eigen::VectorXd();
        std::vector<double> f = s.ys;
        for (std::size_t p = 0; p < m; ++p)
            for (std::size_t k = 0; k < n; ++k) f[k] += winv[k] * coef(ws[p], k) * mu(p);

        bool feasible = true;
        for (std::size_t c = 0; c < m_all && feasible; ++c)
            if (rows.dot(c, f) < -1e-9) feasible = false;
        if (!feasible) continue;

        double obj = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double r = f[k] - s.ys[k];
            obj += s.weights[k] * r * r;
        }
        if (obj < best_obj) {
            best_obj = obj;
            best_f = std::move(f);
        }
    }
    return finalize_fit(s, std::move(best_f));
}

}  // namespace shaperate
