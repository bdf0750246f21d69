#include "shaperate/additive.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

using namespace shaperate;

namespace {

BivariateSample random_bivariate(int n, std::mt19937_64& rng,
                                 const std::function<double(double, double)>& phi0,
                                 double noise_sd) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, noise_sd);
    BivariateSample s;
    s.xs.resize(n);
    s.zs.resize(n);
    s.ys.resize(n);
    for (int i = 0; i < n; ++i) {
        s.xs[i] = unif(rng);
        s.zs[i] = unif(rng);
        s.ys[i] = phi0(s.xs[i], s.zs[i]) + (noise_sd > 0 ? gauss(rng) : 0.0);
    }
    return s;
}

}  // namespace

TEST_CASE("noiseless well-specified additive fit recovers the signal") {
    std::mt19937_64 rng(43);
    auto s = random_bivariate(60, rng, [](double x, double) { return x; }, 0.0);
    auto fit = fit_additive(s, ShapeConstraint::Isotonic, HClass::affine_bounded());
    CHECK(fit.converged);
    CHECK(std::abs(fit.h.beta) < 1e-6);
    // fitted f at design points matches x up to the centering constant
    std::vector<double> xs_sorted = s.xs;
    std::sort(xs_sorted.begin(), xs_sorted.end());
    double c0 = fit.fitted_f[0] - xs_sorted[0];
    for (std::size_t k = 0; k < s.n(); ++k)
        CHECK(fit.fitted_f[k] - xs_sorted[k] == doctest::Approx(c0).epsilon(1e-6));
}

TEST_CASE("noiseless affine nuisance is identified") {
    std::mt19937_64 rng(47);
    auto s = random_bivariate(
        80, rng, [](double x, double z) { return x + 0.5 * (z - 0.5); }, 0.0);
    auto fit = fit_additive(s, ShapeConstraint::Isotonic, HClass::affine_bounded());
    CHECK(fit.converged);
    // beta is only set-identified: any slope whose partial residuals remain
    // monotone in x attains zero loss, so allow a small interval around 1/2
    CHECK(fit.h.beta == doctest::Approx(0.5).epsilon(0.01));
    // joint fit reproduces the responses
    double worst = 0.0;
    std::vector<std::size_t> order(s.n());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.xs[a] < s.xs[b]; });
    for (std::size_t k = 0; k < s.n(); ++k) {
        double pred = fit.fitted_f[k] + fit.h(s.zs[order[k]]);
        worst = std::max(worst, std::abs(pred - s.ys[order[k]]));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("noiseless beta recovery matches a brute-force beta grid") {
    std::mt19937_64 rng(53);
    auto s = random_bivariate(
        50, rng, [](double x, double z) { return x * x + 0.3 * (z - 0.5); }, 0.0);
    auto fit = fit_additive(s, ShapeConstraint::Isotonic, HClass::affine_bounded());

    // brute force: for each beta on a grid, isotonic fit of Y - beta(z-1/2)
    double best_obj = std::numeric_limits<double>::infinity(), best_beta = 0.0;
    std::vector<std::size_t> order(s.n());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.xs[a] < s.xs[b]; });
    for (int bi = -100; bi <= 100; ++bi) {
        double beta = bi / 100.0;
        std::vector<double> xs(s.n()), ys(s.n());
        for (std::size_t k = 0; k < s.n(); ++k) {
            xs[k] = s.xs[order[k]];
            ys[k] = s.ys[order[k]] - beta * (s.zs[order[k]] - 0.5);
        }
        auto iso = fit_isotonic(make_sorted_sample(xs, ys));
        double obj = 0.0;
        for (std::size_t k = 0; k < s.n(); ++k) {
            double r = ys[k] - iso.fitted[k];
            obj += r * r;
        }
        if (obj < best_obj) {
            best_obj = obj;
            best_beta = beta;
        }
    }
    CHECK(fit.h.beta == doctest::Approx(best_beta).epsilon(0.02));
    CHECK(fit.objective() <= best_obj + 1e-9);
}

TEST_CASE("degenerate H reduces to the univariate fits") {
    std::mt19937_64 rng(59);
    auto s = random_bivariate(40, rng, [](double x, double) { return 2 * x; }, 0.5);
    auto add = fit_additive(s, ShapeConstraint::Isotonic, HClass::zero());

    std::vector<double> xs = s.xs, ys = s.ys;
    auto iso = fit_isotonic(make_sorted_sample(xs, ys));
    for (std::size_t k = 0; k < s.n(); ++k)
        CHECK(add.fitted_f[k] == doctest::Approx(iso.fitted[k]).epsilon(1e-12));

    auto addc = fit_additive(s, ShapeConstraint::Convex, HClass::zero());
    auto cvx = fit_convex(make_sorted_sample(xs, ys));
    for (std::size_t k = 0; k < s.n(); ++k)
        CHECK(addc.fitted_f[k] == doctest::Approx(cvx.fitted[k]).epsilon(1e-9));
}

TEST_CASE("objective trace is non-increasing") {
    std::mt19937_64 rng(61);
    auto s = random_bivariate(
        120, rng, [](double x, double z) { return x + 0.4 * (z - 0.5); }, 1.0);
    for (auto kind : {HClass::affine_bounded(), HClass::binned_sieve(8, 1.0),
                      HClass::centered_interval_indicators(16)}) {
        auto fit = fit_additive(s, ShapeConstraint::Isotonic, kind);
        for (std::size_t t = 1; t < fit.objective_trace.size(); ++t)
            CHECK(fit.objective_trace[t] <= fit.objective_trace[t - 1] + 1e-12);
    }
}

TEST_CASE("partial residual audit at convergence, isotonic shape") {
    std::mt19937_64 rng(67);
    for (auto kind : {HClass::affine_bounded(), HClass::binned_sieve(6, 1.0),
                      HClass::centered_interval_indicators(8)}) {
        auto s = random_bivariate(
            80, rng, [](double x, double z) { return x + 0.3 * (z - 0.5); }, 0.7);
        auto fit = fit_additive(s, ShapeConstraint::Isotonic, kind);
        CHECK(fit.converged);
        CHECK(partial_residual_audit(s, fit) <= 1e-8);
    }
}

TEST_CASE("partial residual audit, convex shape") {
    std::mt19937_64 rng(71);
    auto s = random_bivariate(
        60, rng, [](double x, double z) { return (x - 0.5) * (x - 0.5) + 0.2 * (z - 0.5); },
        0.5);
    auto fit = fit_additive(s, ShapeConstraint::Convex, HClass::affine_bounded());
    CHECK(fit.converged);
    CHECK(partial_residual_audit(s, fit) <= 1e-7);
}

TEST_CASE("fitted h is empirically centered") {
    std::mt19937_64 rng(73);
    auto s = random_bivariate(
        100, rng, [](double x, double z) { return x + 0.6 * (z - 0.5); }, 0.8);
    for (auto kind : {HClass::affine_bounded(), HClass::binned_sieve(8, 1.0),
                      HClass::centered_interval_indicators(12)}) {
        auto fit = fit_additive(s, ShapeConstraint::Isotonic, kind);
        double mean = 0.0;
        for (double z : s.zs) mean += fit.h(z);
        mean /= static_cast<double>(s.n());
        CHECK(std::abs(mean) < 1e-9);
    }
}

TEST_CASE("indicator restarts never worsen the objective") {
    std::mt19937_64 rng(79);
    auto s = random_bivariate(
        70, rng,
        [](double x, double z) { return x + ((z > 0.25 && z < 0.5) ? 1.0 : 0.0); }, 0.5);
    AdditiveOptions one;
    one.restarts = 1;
    AdditiveOptions three;
    three.restarts = 3;
    three.restart_seed = 5;
    auto f1 = fit_additive(s, ShapeConstraint::Isotonic,
                           HClass::centered_interval_indicators(16), one);
    auto f3 = fit_additive(s, ShapeConstraint::Isotonic,
                           HClass::centered_interval_indicators(16), three);
    CHECK(f3.objective() <= f1.objective() + 1e-12);
}

TEST_CASE("input validation") {
    BivariateSample bad;
    bad.xs = {0.1};
    bad.zs = {0.2, 0.3};
    bad.ys = {1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    BivariateSample oob;
    oob.xs = {1.4};
    oob.zs = {0.2};
    oob.ys = {1.0};
    CHECK_THROWS_AS(oob.validate(), std::invalid_argument);
    CHECK_THROWS_AS(HClass::binned_sieve(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(HClass::centered_interval_indicators(1), std::invalid_argument);
}
