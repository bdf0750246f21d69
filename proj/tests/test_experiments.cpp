#include "shaperate/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace shaperate;

TEST_CASE("log-log slope on an exact power law") {
    std::vector<std::pair<double, double>> pts;
    for (int n : {128, 256, 512, 1024, 2048})
        pts.emplace_back(n, 3.0 * std::pow(n, -2.0 / 3.0));
    auto fit = fit_loglog_slope(pts);
    CHECK(fit.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-10));
    CHECK(fit.std_err == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("log-log slope of the oracle rate with its log factor") {
    std::vector<std::pair<double, double>> pts;
    for (int p = 7; p <= 13; ++p) {
        double n = std::exp2(p);
        pts.emplace_back(n, std::log(n) * std::log(n) / n);
    }
    auto fit = fit_loglog_slope(pts);
    // the log factor flattens the pure 1/n slope by about 2/ln(n)
    CHECK(fit.slope > -1.0);
    CHECK(fit.slope < -0.65);
}

TEST_CASE("log-log slope preconditions") {
    std::vector<std::pair<double, double>> three = {{1, 1}, {2, 1}, {4, 1}};
    CHECK_THROWS_AS(fit_loglog_slope(three), std::invalid_argument);
    std::vector<std::pair<double, double>> bad = {{1, 1}, {2, 1}, {4, 0.0}, {8, 1}};
    CHECK_THROWS_AS(fit_loglog_slope(bad), std::invalid_argument);
}

TEST_CASE("plan validation") {
    ExperimentPlan p;
    p.n_grid = {64, 32};
    p.replications = 30;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.n_grid = {32, 64};
    p.replications = 10;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.replications = 30;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("monotone signal is unchanged by the isotonic projection") {
    SignalSpec f0 = SignalSpec::linear(0.1, 0.8);
    StepFunction star = compute_f0_star_isotonic(f0, 256);
    for (double x : {0.1, 0.35, 0.62, 0.9})
        CHECK(star(x) == doctest::Approx(f0(x)).epsilon(0.02));
}

TEST_CASE("isotonic projection of a hump matches the min-max oracle on the grid") {
    // f0(x) = -(x - 1/2)^2 is not monotone; the discrete projection at the
    // grid must agree with the min-max formula applied to the grid sample
    SignalSpec f0 = SignalSpec::custom_grid([] {
        std::vector<double> v(257);
        for (int i = 0; i <= 256; ++i) {
            double x = i / 256.0;
            v[i] = -(x - 0.5) * (x - 0.5);
        }
        return v;
    }());
    const int g = 256;
    StepFunction star = compute_f0_star_isotonic(f0, g);
    std::vector<double> xs(g), ys(g);
    for (int i = 0; i < g; ++i) {
        xs[i] = (i + 0.5) / g;
        ys[i] = f0(xs[i]);
    }
    SortedSample s = make_sorted_sample(xs, ys);
    for (int i : {0, 50, 128, 200, 255})
        CHECK(star(xs[i]) == doctest::Approx(minmax_value(s, i)).epsilon(1e-9));
    // projection of a concave hump is non-decreasing
    CHECK_NOTHROW(star.validate());
}

TEST_CASE("convex signal is unchanged by the convex projection") {
    SignalSpec f0 = SignalSpec::convex_poly(0.2, -1.0, 1.5);
    PiecewiseLinearFunction star = compute_f0_star_convex(f0, 512);
    for (double x : {0.1, 0.4, 0.7, 0.95})
        CHECK(star(x) == doctest::Approx(f0(x)).epsilon(1e-3));
}

TEST_CASE("risk curves are reproducible and shrink with n") {
    ExperimentPlan plan;
    plan.estimator = EstimatorKind::Isotonic;
    plan.signal = SignalSpec::linear(0.0, 1.0);
    plan.law = ErrorLaw::gaussian(1.0);
    plan.n_grid = {32, 64, 128, 256};
    plan.replications = 30;
    plan.base_seed = 99;
    RiskCurve a = run_risk_curve(plan);
    RiskCurve b = run_risk_curve(plan);
    REQUIRE(a.points.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.points[i].summary == b.points[i].summary);
        CHECK(a.points[i].iqr_lo <= a.points[i].summary);
        CHECK(a.points[i].iqr_hi >= a.points[i].summary);
    }
    CHECK(a.slope == b.slope);
    CHECK(a.points.back().summary < a.points.front().summary);
    CHECK(a.slope < -0.2);
    CHECK(supnorm_bounded(a));
}

TEST_CASE("near-noiseless risk is interpolation error only") {
    ExperimentPlan plan;
    plan.estimator = EstimatorKind::Isotonic;
    plan.signal = SignalSpec::linear(0.0, 1.0);
    plan.law = ErrorLaw::gaussian(1e-9);
    plan.n_grid = {32, 64, 128, 256};
    plan.replications = 30;
    plan.base_seed = 5;
    RiskCurve c = run_risk_curve(plan);
    CHECK(c.points.front().summary < 1e-2);
    CHECK(c.slope < -0.5);
}

TEST_CASE("convex and additive estimators run through the harness") {
    ExperimentPlan plan;
    plan.estimator = EstimatorKind::Convex;
    plan.signal = SignalSpec::convex_poly(0.0, -1.0, 1.0);
    plan.law = ErrorLaw::gaussian(0.5);
    plan.n_grid = {32, 64};
    plan.replications = 30;
    plan.base_seed = 21;
    plan.loss_summary = LossSummary::Quantile;
    plan.summary_param = 0.5;
    RiskCurve c = run_risk_curve(plan);
    CHECK(c.points.size() == 2);
    CHECK(c.points[0].summary > 0.0);

    plan.estimator = EstimatorKind::Additive;
    plan.signal = SignalSpec::linear(0.0, 1.0);
    plan.additive_shape = ShapeConstraint::Isotonic;
    plan.additive_hclass = HClass::affine_bounded();
    plan.h0_beta = 0.5;
    RiskCurve ac = run_risk_curve(plan);
    CHECK(ac.points.size() == 2);
    CHECK(ac.points[1].summary < ac.points[0].summary);
}

TEST_CASE("oracle audit rejects laws without a finite L_{2,1} moment") {
    ExperimentPlan plan;
    plan.estimator = EstimatorKind::Isotonic;
    plan.signal = SignalSpec::constant(0.0);
    plan.law = ErrorLaw::pareto_eta(1.0);
    plan.n_grid = {32, 64, 128, 256};
    plan.replications = 30;
    CHECK_THROWS_AS(run_oracle_audit(plan, 4), std::invalid_argument);
}

TEST_CASE("oracle audit on a one-piece signal") {
    ExperimentPlan plan;
    plan.estimator = EstimatorKind::Isotonic;
    plan.signal = SignalSpec::constant(0.0);
    plan.law = ErrorLaw::student_t(2.5);
    plan.n_grid = {64, 128, 256, 512};
    plan.replications = 40;
    plan.base_seed = 31;
    OracleAudit audit = run_oracle_audit(plan, 5);
    REQUIRE(audit.points.size() == 4);
    for (const OraclePoint& p : audit.points) {
        // f0 constant: the best single piece is exact, so min-RHS = log^2 n / n
        CHECK(p.rhs_argmin_m == 1);
        double n = p.n;
        CHECK(p.rhs_min == doctest::Approx(std::log(n) * std::log(n) / n));
        CHECK(p.ratio_median > 0.0);
        CHECK(p.ratio_median < 10.0);
    }
}

TEST_CASE("tree LSE is deterministic across enumeration orders") {
    TreeClass t = build_tree_class(0.5, 6);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss;
    for (int rep = 0; rep < 25; ++rep) {
        int n = 200;
        std::vector<double> xs(n), ys(n);
        for (int i = 0; i < n; ++i) {
            xs[i] = unif(rng);
            ys[i] = gauss(rng);
        }
        TreeLseResult fwd = tree_lse(t, xs, ys, false);
        TreeLseResult rev = tree_lse(t, xs, ys, true);
        CHECK(fwd.is_zero == rev.is_zero);
        CHECK(fwd.level == rev.level);
        CHECK(fwd.position == rev.position);
        CHECK(fwd.rss == rev.rss);
    }
}

TEST_CASE("tree LSE picks the loaded interval") {
    TreeClass t = build_tree_class(0.5, 3);
    const TreeInterval& target = t.levels[1][2];
    std::vector<double> xs, ys;
    // strong positive signal inside the target interval, nothing elsewhere
    for (int i = 0; i < 50; ++i) {
        xs.push_back(target.start + target.length * (i + 0.5) / 50.0);
        ys.push_back(2.0);
    }
    for (int i = 0; i < 50; ++i) {
        xs.push_back(0.96 + 0.0005 * i);
        ys.push_back(0.0);
    }
    // drag the enclosing coarser intervals below the target's score
    for (int i = 0; i < 30; ++i) {
        xs.push_back(0.35 + 0.1 * (i + 0.5) / 30.0);
        ys.push_back(-3.0);
    }
    TreeLseResult res = tree_lse(t, xs, ys);
    CHECK_FALSE(res.is_zero);
    CHECK(res.level == 2);
    CHECK(res.position == 2);
    CHECK(res.loss == doctest::Approx(target.length));

    // all-zero responses select the zero member
    std::vector<double> zeros(xs.size(), 0.0);
    TreeLseResult z = tree_lse(t, xs, zeros);
    CHECK(z.is_zero);
    CHECK(z.loss == 0.0);
}

TEST_CASE("lower bound probe runs and pairs its arms") {
    std::vector<int> grid = {64, 128, 256, 512};
    LowerBoundProbe probe = run_lower_bound_probe(0.5, 0.25, grid, 40, 77);
    REQUIRE(probe.heavy.points.size() == 4);
    REQUIRE(probe.control.points.size() == 4);
    for (const RiskPoint& p : probe.heavy.points) CHECK(p.summary >= 0.0);
    LowerBoundProbe again = run_lower_bound_probe(0.5, 0.25, grid, 40, 77);
    CHECK(probe.slope_gap == again.slope_gap);
    CHECK_THROWS_AS(run_lower_bound_probe(1.5, 0.25, grid, 40, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_lower_bound_probe(0.5, 0.25, grid, 5, 1), std::invalid_argument);
}
