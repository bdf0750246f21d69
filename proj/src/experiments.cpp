#include "shaperate/experiments.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace shaperate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    // static partition; each task writes only to its own slot, so the merged
    // result does not depend on scheduling
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < count; i += threads) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

double summarize(std::vector<double> v, LossSummary how, double param) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    auto quantile_at = [&](double q) {
        double pos = q * static_cast<double>(k - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= k) return v.back();
        double frac = pos - static_cast<double>(lo);
        return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
    };
    switch (how) {
        case LossSummary::Median:
            return quantile_at(0.5);
        case LossSummary::Quantile:
            return quantile_at(param);
        case LossSummary::TrimmedMean: {
            std::size_t cut = static_cast<std::size_t>(param * static_cast<double>(k));
            if (2 * cut >= k) throw std::invalid_argument("summarize: trim fraction too large");
            double acc = 0.0;
            for (std::size_t i = cut; i < k - cut; ++i) acc += v[i];
            return acc / static_cast<double>(k - 2 * cut);
        }
        case LossSummary::Mean: {
            double acc = 0.0;
            for (double x : v) acc += x;
            return acc / static_cast<double>(k);
        }
    }
    return 0.0;
}

double median_of(std::vector<double> v) { return summarize(std::move(v), LossSummary::Median, 0.0); }

std::vector<double> uniform_design(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> xs(n);
    for (double& x : xs) x = unif(rng);
    return xs;
}

// loss target: either the signal itself or its projection proxy
struct LossTarget {
    const SignalSpec* signal = nullptr;
    std::optional<StepFunction> step;
    std::optional<PiecewiseLinearFunction> pwl;
};

struct FitOutcome {
    double loss;
    double supnorm;
};

FitOutcome fit_and_score(const ExperimentPlan& plan, const LossTarget& target,
                         std::size_t n, std::uint64_t seed_x, std::uint64_t seed_z,
                         std::uint64_t seed_err, std::uint64_t seed_restart) {
    std::vector<double> xs = uniform_design(n, seed_x);
    std::vector<double> errs = plan.law.sample(n, seed_err);

    if (plan.estimator == EstimatorKind::Additive) {
        BivariateSample bs;
        bs.xs = xs;
        bs.zs = uniform_design(n, seed_z);
        bs.ys.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            bs.ys[i] = plan.signal(xs[i]) + plan.h0_beta * (bs.zs[i] - 0.5) + errs[i];
        AdditiveOptions opts;
        opts.restarts = plan.additive_restarts;
        opts.restart_seed = seed_restart;
        AdditiveFit fit = fit_additive(bs, plan.additive_shape, plan.additive_hclass, opts);
        double loss;
        if (plan.additive_shape == ShapeConstraint::Isotonic)
            loss = target.step ? l2_loss(fit.iso->extension, *target.step)
                               : l2_loss(fit.iso->extension, *target.signal);
        else
            loss = target.pwl ? l2_loss(fit.cvx->extension, *target.pwl)
                              : l2_loss(fit.cvx->extension, *target.signal);
        double sup = 0.0;
        for (double v : fit.fitted_f) sup = std::max(sup, std::abs(v));
        return {loss, sup};
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = plan.signal(xs[i]) + errs[i];
    SortedSample s = make_sorted_sample(xs, ys);

    if (plan.estimator == EstimatorKind::Isotonic) {
        IsotonicFit fit = fit_isotonic(s);
        double loss = target.step ? l2_loss(fit.extension, *target.step)
                                  : l2_loss(fit.extension, *target.signal);
        double sup = std::max(std::abs(fit.fitted.front()), std::abs(fit.fitted.back()));
        return {loss, sup};
    }

    ConvexFit fit = fit_convex(s);
    double loss = target.pwl ? l2_loss(fit.extension, *target.pwl)
                             : l2_loss(fit.extension, *target.signal);
    double sup = 0.0;
    for (double v : fit.fitted) sup = std::max(sup, std::abs(v));
    return {loss, sup};
}

LossTarget make_target(const ExperimentPlan& plan) {
    LossTarget t;
    t.signal = &plan.signal;
    if (!plan.project_target) return t;
    bool iso = plan.estimator == EstimatorKind::Isotonic ||
               (plan.estimator == EstimatorKind::Additive &&
                plan.additive_shape == ShapeConstraint::Isotonic);
    if (iso)
        t.step = compute_f0_star_isotonic(plan.signal, plan.projection_grid);
    else
        t.pwl = compute_f0_star_convex(plan.signal, plan.projection_grid);
    return t;
}

SlopeFit ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t k = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double r = y[i] - my - slope * (x[i] - mx);
        rss += r * r;
    }
    double se = k > 2 ? std::sqrt(rss / static_cast<double>(k - 2) / sxx) : kInf;
    return {slope, se};
}

}  // namespace

void ExperimentPlan::validate() const {
    if (n_grid.empty()) throw std::invalid_argument("plan: n_grid must be non-empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 2) throw std::invalid_argument("plan: n_grid entries must be >= 2");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("plan: n_grid must be strictly increasing");
    }
    if (replications < 30) throw std::invalid_argument("plan: replications must be >= 30");
    if (loss_summary == LossSummary::TrimmedMean &&
        !(summary_param >= 0.0 && summary_param < 0.5))
        throw std::invalid_argument("plan: trim fraction must lie in [0, 0.5)");
    if (loss_summary == LossSummary::Quantile &&
        !(summary_param > 0.0 && summary_param < 1.0))
        throw std::invalid_argument("plan: quantile level must lie in (0, 1)");
    if (project_target && projection_grid < 256)
        throw std::invalid_argument("plan: projection_grid must be >= 256");
    if (additive_restarts < 1)
        throw std::invalid_argument("plan: additive_restarts must be >= 1");
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4)
        throw std::invalid_argument("fit_loglog_slope: need >= 4 points");
    std::vector<double> lx, ly;
    lx.reserve(points.size());
    ly.reserve(points.size());
    for (const auto& [n, summary] : points) {
        if (!(summary > 0.0))
            throw std::invalid_argument("fit_loglog_slope: summaries must be > 0");
        lx.push_back(std::log(n));
        ly.push_back(std::log(summary));
    }
    return ols_slope(lx, ly);
}

RiskCurve run_risk_curve(const ExperimentPlan& plan) {
    plan.validate();
    LossTarget target = make_target(plan);

    RiskCurve curve;
    curve.points.reserve(plan.n_grid.size());
    for (std::size_t s = 0; s < plan.n_grid.size(); ++s) {
        const int n = plan.n_grid[s];
        std::vector<double> losses(plan.replications);
        std::vector<double> sups(plan.replications);
        parallel_for(plan.replications, plan.threads, [&](int r) {
            std::uint64_t sx = derive_seed(plan.base_seed, r, s * 8 + 0);
            std::uint64_t sz = derive_seed(plan.base_seed, r, s * 8 + 1);
            std::uint64_t se = derive_seed(plan.base_seed, r, s * 8 + 2);
            std::uint64_t sr = derive_seed(plan.base_seed, r, s * 8 + 3);
            try {
                FitOutcome out = fit_and_score(plan, target, n, sx, sz, se, sr);
                losses[r] = out.loss;
                sups[r] = out.supnorm;
            } catch (const std::exception& e) {
                throw std::runtime_error("replication " + std::to_string(r) + " at n=" +
                                         std::to_string(n) + ": " + e.what());
            }
        });
        RiskPoint pt;
        pt.n = n;
        pt.summary = summarize(losses, plan.loss_summary, plan.summary_param);
        pt.iqr_lo = summarize(losses, LossSummary::Quantile, 0.25);
        pt.iqr_hi = summarize(losses, LossSummary::Quantile, 0.75);
        pt.supnorm_median = median_of(sups);
        curve.points.push_back(pt);
    }

    if (curve.points.size() >= 4) {
        bool positive = true;
        std::vector<std::pair<double, double>> pts;
        for (const RiskPoint& p : curve.points) {
            if (!(p.summary > 0.0)) positive = false;
            pts.emplace_back(static_cast<double>(p.n), p.summary);
        }
        if (positive) {
            SlopeFit f = fit_loglog_slope(pts);
            curve.slope = f.slope;
            curve.slope_stderr = f.std_err;
        }
    }
    return curve;
}

bool supnorm_bounded(const RiskCurve& curve) {
    const std::size_t k = curve.points.size();
    if (k < 4) throw std::invalid_argument("supnorm_bounded: need >= 4 grid points");
    std::vector<double> lx, y;
    for (const RiskPoint& p : curve.points) {
        lx.push_back(std::log(static_cast<double>(p.n)));
        y.push_back(p.supnorm_median);
    }
    SlopeFit f = ols_slope(lx, y);
    if (!(f.std_err > 0.0)) return f.slope <= 0.0;
    boost::math::students_t dist(static_cast<double>(k - 2));
    double crit = boost::math::quantile(dist, 0.95);
    return f.slope / f.std_err < crit;
}

StepFunction compute_f0_star_isotonic(const SignalSpec& f0, int grid_size) {
    if (grid_size < 256)
        throw std::invalid_argument("compute_f0_star: grid_size must be >= 256");
    const int g = grid_size;
    std::vector<double> xs(g), ys(g);
    for (int i = 0; i < g; ++i) {
        xs[i] = (i + 0.5) / g;  // cell midpoints, uniform cell weights
        ys[i] = f0(xs[i]);
    }
    SortedSample s = make_sorted_sample(xs, ys);
    IsotonicFit fit = fit_isotonic(s);

    StepFunction out;
    out.isotonic = true;
    for (int i = 1; i < g; ++i) {
        if (fit.fitted[i] != fit.fitted[i - 1]) {
            out.breakpoints.push_back(static_cast<double>(i) / g);
            out.values.push_back(fit.fitted[i - 1]);
        }
    }
    out.breakpoints.push_back(1.0);
    out.values.push_back(fit.fitted[g - 1]);
    out.validate();
    return out;
}

PiecewiseLinearFunction compute_f0_star_convex(const SignalSpec& f0, int grid_size) {
    if (grid_size < 256)
        throw std::invalid_argument("compute_f0_star: grid_size must be >= 256");
    const int g = grid_size;
    std::vector<double> xs(g), ys(g);
    for (int i = 0; i < g; ++i) {
        xs[i] = (i + 0.5) / g;
        ys[i] = f0(xs[i]);
    }
    SortedSample s = make_sorted_sample(xs, ys);
    return fit_convex(s).extension;
}

OracleAudit run_oracle_audit(const ExperimentPlan& plan, int m_max) {
    plan.validate();
    if (m_max < 1) throw std::invalid_argument("run_oracle_audit: m_max must be >= 1");
    if (!std::isfinite(lp1_norm(plan.law, 2.0)))
        throw std::invalid_argument(
            "run_oracle_audit: the error law has infinite L_{2,1} norm; the oracle "
            "inequality hypothesis requires a finite L_{2,1} moment");

    LossTarget target = make_target(plan);
    // m-piece approximation needs a SignalSpec target; under mis-specification
    // replace the signal by its projection proxy
    SignalSpec approx_target = plan.signal;
    if (target.step) {
        approx_target = SignalSpec::step_train(target.step->breakpoints, target.step->values);
    } else if (target.pwl) {
        const int g = 513;
        std::vector<double> vals(g);
        for (int i = 0; i < g; ++i) vals[i] = (*target.pwl)(static_cast<double>(i) / (g - 1));
        approx_target = SignalSpec::custom_grid(vals);
    }

    bool iso_family = plan.estimator != EstimatorKind::Convex;
    PieceFamily family = iso_family ? PieceFamily::Constant : PieceFamily::LinearConvex;
    std::vector<double> approx2(m_max);
    for (int m = 1; m <= m_max; ++m)
        approx2[m - 1] = best_m_piece_approximation(approx_target, m, family, 512).error2;

    OracleAudit audit;
    for (std::size_t s = 0; s < plan.n_grid.size(); ++s) {
        const int n = plan.n_grid[s];
        const double logn2 = std::log(static_cast<double>(n)) * std::log(static_cast<double>(n));
        double rhs_min = kInf;
        int argmin_m = 1;
        for (int m = 1; m <= m_max; ++m) {
            double rhs = approx2[m - 1] + m * logn2 / n;
            if (rhs < rhs_min) {
                rhs_min = rhs;
                argmin_m = m;
            }
        }

        std::vector<double> lhs(plan.replications);
        parallel_for(plan.replications, plan.threads, [&](int r) {
            std::uint64_t sx = derive_seed(plan.base_seed, r, s * 8 + 0);
            std::uint64_t sz = derive_seed(plan.base_seed, r, s * 8 + 1);
            std::uint64_t se = derive_seed(plan.base_seed, r, s * 8 + 2);
            std::uint64_t sr = derive_seed(plan.base_seed, r, s * 8 + 3);
            lhs[r] = fit_and_score(plan, target, n, sx, sz, se, sr).loss;
        });

        std::vector<double> ratio(lhs);
        for (double& v : ratio) v /= rhs_min;
        OraclePoint pt;
        pt.n = n;
        pt.lhs_median = median_of(lhs);
        pt.rhs_min = rhs_min;
        pt.rhs_argmin_m = argmin_m;
        pt.argmin_at_boundary = argmin_m == m_max;
        pt.ratio_median = median_of(ratio);
        pt.ratio_q90 = summarize(ratio, LossSummary::Quantile, 0.9);
        audit.points.push_back(pt);
    }

    const std::size_t k = audit.points.size();
    if (k >= 3) {
        std::vector<double> lx, ry;
        for (const OraclePoint& p : audit.points) {
            lx.push_back(std::log(static_cast<double>(p.n)));
            ry.push_back(p.ratio_median);
        }
        SlopeFit f = ols_slope(lx, ry);
        audit.trend_slope = f.slope;
        audit.trend_tstat = f.std_err > 0.0 ? f.slope / f.std_err : 0.0;
        boost::math::students_t dist(static_cast<double>(k - 2));
        audit.no_upward_trend = audit.trend_tstat < boost::math::quantile(dist, 0.95);
    } else {
        audit.no_upward_trend = audit.points.size() < 2 ||
                                audit.points.back().ratio_median <=
                                    audit.points.front().ratio_median;
    }
    return audit;
}

namespace {

// dyadic family at gamma = 1: every interval of length 2^-l at each level,
// realizing envelope norm ~ 1
TreeClass full_dyadic_class(int max_level) {
    TreeClass t;
    t.gamma = 1.0;
    t.base = 2.0;
    for (int l = 1; l <= max_level; ++l) {
        double len = std::exp2(-l);
        std::vector<TreeInterval> level;
        int count = 1 << l;
        level.reserve(count);
        for (int i = 0; i < count; ++i) level.push_back({i * len, len});
        t.levels.push_back(level);
    }
    return t;
}

}  // namespace

TreeLseResult tree_lse(const TreeClass& t, const std::vector<double>& xs,
                       const std::vector<double>& ys, bool reverse_enumeration) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("tree_lse: xs and ys must be non-empty and equal-length");
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] < xs[b];
    });
    std::vector<double> sx(n), prefix(n + 1, 0.0);
    double y2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx[i] = xs[order[i]];
        prefix[i + 1] = prefix[i] + ys[order[i]];
        y2 += ys[order[i]] * ys[order[i]];
    }

    // RSS(1_I) = sum y^2 - (2 sum_{X in I} Y - #{X in I}); the zero member
    // scores 0, so maximize the parenthesized score
    auto score_of = [&](const TreeInterval& iv) {
        auto lo = std::lower_bound(sx.begin(), sx.end(), iv.start) - sx.begin();
        auto hi = std::lower_bound(sx.begin(), sx.end(), iv.start + iv.length) - sx.begin();
        double s = prefix[hi] - prefix[lo];
        return 2.0 * s - static_cast<double>(hi - lo);
    };

    // canonical order: the zero member first, then by (level, position);
    // ties always resolve to the canonically earlier member, so the
    // enumeration direction cannot change the result
    double best_score = 0.0;
    long best_key = -1;  // -1 encodes the zero member
    TreeInterval best_iv{0.0, 0.0};
    const int levels = static_cast<int>(t.levels.size());
    for (int li = 0; li < levels; ++li) {
        int l = reverse_enumeration ? levels - 1 - li : li;
        const auto& level = t.levels[l];
        const int count = static_cast<int>(level.size());
        for (int pi = 0; pi < count; ++pi) {
            int p = reverse_enumeration ? count - 1 - pi : pi;
            double sc = score_of(level[p]);
            long key = (static_cast<long>(l) << 32) | p;
            if (sc > best_score || (sc == best_score && best_key >= 0 && key < best_key)) {
                best_score = sc;
                best_key = key;
                best_iv = level[p];
            }
        }
    }

    TreeLseResult res;
    res.is_zero = best_key < 0;
    res.level = res.is_zero ? 0 : static_cast<int>(best_key >> 32) + 1;
    res.position = res.is_zero ? 0 : static_cast<int>(best_key & 0xffffffff);
    res.rss = y2 - best_score;
    res.loss = res.is_zero ? 0.0 : best_iv.length;
    return res;
}

LowerBoundProbe run_lower_bound_probe(double gamma, double eps,
                                      const std::vector<int>& n_grid, int replications,
                                      std::uint64_t base_seed, int threads) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("run_lower_bound_probe: gamma must lie in (0,1]");
    if (!(eps > 0.0 && eps < 0.5))
        throw std::invalid_argument("run_lower_bound_probe: eps must lie in (0, 1/2)");
    if (n_grid.empty()) throw std::invalid_argument("run_lower_bound_probe: empty n_grid");
    if (replications < 30)
        throw std::invalid_argument("run_lower_bound_probe: replications must be >= 30");

    const int n_max = n_grid.back();
    // deepest level whose intervals still capture around one design point
    int max_level =
        std::max(3, static_cast<int>(std::ceil((1.0 - gamma) * std::log2(n_max))) + 1);
    TreeClass tree = gamma < 1.0 ? build_tree_class(gamma, max_level) : full_dyadic_class(10);
    double deepest = tree.levels.back().front().length;
    if (deepest * n_max > 8.0)
        throw std::runtime_error(
            "run_lower_bound_probe: constructed level depth insufficient for the "
            "largest sample size");

    ErrorLaw heavy_law = gamma < 1.0 ? ErrorLaw::sym_stable(2.0 - eps)
                                     : ErrorLaw::pareto_eta(50.0);
    ErrorLaw control_law = ErrorLaw::gaussian(1.0);

    LowerBoundProbe probe;
    for (RiskCurve* arm : {&probe.heavy, &probe.control}) {
        const bool is_heavy = arm == &probe.heavy;
        const ErrorLaw& law = is_heavy ? heavy_law : control_law;
        for (std::size_t s = 0; s < n_grid.size(); ++s) {
            const int n = n_grid[s];
            std::vector<double> losses(replications);
            parallel_for(replications, threads, [&](int r) {
                // the design seed is shared between arms; only the error draw differs
                std::uint64_t sx = derive_seed(base_seed, r, s * 8 + 0);
                std::uint64_t se = derive_seed(base_seed, r, s * 8 + (is_heavy ? 1 : 2));
                std::vector<double> xs = uniform_design(n, sx);
                std::vector<double> ys = law.sample(n, se);  // f0 = 0
                losses[r] = tree_lse(tree, xs, ys).loss;
            });
            RiskPoint pt;
            pt.n = n;
            pt.summary = summarize(losses, LossSummary::Mean, 0.0);
            pt.iqr_lo = summarize(losses, LossSummary::Quantile, 0.25);
            pt.iqr_hi = summarize(losses, LossSummary::Quantile, 0.75);
            pt.supnorm_median = 0.0;
            arm->points.push_back(pt);
        }
        if (arm->points.size() >= 4) {
            std::vector<std::pair<double, double>> pts;
            bool positive = true;
            for (const RiskPoint& p : arm->points) {
                if (!(p.summary > 0.0)) positive = false;
                pts.emplace_back(static_cast<double>(p.n), p.summary);
            }
            if (positive) {
                SlopeFit f = fit_loglog_slope(pts);
                arm->slope = f.slope;
                arm->slope_stderr = f.std_err;
            }
        }
    }

    probe.slope_gap = probe.heavy.slope - probe.control.slope;
    probe.gap_stderr = std::sqrt(probe.heavy.slope_stderr * probe.heavy.slope_stderr +
                                 probe.control.slope_stderr * probe.control.slope_stderr);
    probe.direction_confirmed = probe.slope_gap - 1.645 * probe.gap_stderr > 0.0;
    return probe;
}

}  // namespace shaperate
