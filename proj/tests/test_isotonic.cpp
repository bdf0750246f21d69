#include "shaperate/isotonic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace shaperate;

namespace {

SortedSample sample_on_grid(const std::vector<double>& ys) {
    std::vector<double> xs(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
        xs[i] = (i + 1.0) / (ys.size() + 1.0);
    return make_sorted_sample(xs, ys);
}

}  // namespace

TEST_CASE("already isotonic data is a fixed point") {
    auto fit = fit_isotonic(sample_on_grid({1, 2, 3}));
    CHECK(fit.fitted == std::vector<double>{1, 2, 3});
}

TEST_CASE("violating pair pools to its mean") {
    auto fit = fit_isotonic(sample_on_grid({2, 1}));
    CHECK(fit.fitted[0] == doctest::Approx(1.5));
    CHECK(fit.fitted[1] == doctest::Approx(1.5));
    CHECK(fit.blocks.size() == 1);
    CHECK(fit.blocks[0].weight == doctest::Approx(2.0));
}

TEST_CASE("interior violation pools only the violating pair") {
    auto fit = fit_isotonic(sample_on_grid({1, 3, 2, 4}));
    CHECK(fit.fitted[0] == doctest::Approx(1.0));
    CHECK(fit.fitted[1] == doctest::Approx(2.5));
    CHECK(fit.fitted[2] == doctest::Approx(2.5));
    CHECK(fit.fitted[3] == doctest::Approx(4.0));
}

TEST_CASE("min-max formula on the three-point example") {
    SortedSample s = sample_on_grid({3, 1, 2});
    CHECK(minmax_value(s, 0) == doctest::Approx(2.0));
    CHECK(minmax_value(s, 1) == doctest::Approx(2.0));
    SortedSample single = sample_on_grid({7});
    CHECK(minmax_value(single, 0) == doctest::Approx(7.0));
    CHECK_THROWS_AS(minmax_value(s, 3), std::out_of_range);
}

TEST_CASE("fit equals the min-max formula on random samples") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> nd(1, 50);
    for (int rep = 0; rep < 100; ++rep) {
        int n = nd(rng);
        std::vector<double> xs(n), ys(n);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            xs[i] = unif(rng);
            ys[i] = gauss(rng);
        }
        SortedSample s = make_sorted_sample(xs, ys);
        auto fit = fit_isotonic(s);
        for (std::size_t j = 0; j < s.n(); ++j)
            CHECK(std::abs(fit.fitted[j] - minmax_value(s, j)) <= 1e-10);
    }
}

TEST_CASE("projection property against random non-decreasing competitors") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    for (int rep = 0; rep < 50; ++rep) {
        int n = 20;
        std::vector<double> ys(n);
        for (double& y : ys) y = gauss(rng);
        SortedSample s = sample_on_grid(ys);
        auto fit = fit_isotonic(s);

        std::vector<double> g(n);
        double acc = gauss(rng);
        for (int i = 0; i < n; ++i) {
            acc += std::abs(gauss(rng));
            g[i] = acc;
        }
        double inner = 0.0;
        for (int i = 0; i < n; ++i)
            inner += s.weights[i] * (s.ys[i] - fit.fitted[i]) * (g[i] - fit.fitted[i]);
        CHECK(inner <= 1e-9);
    }
}

TEST_CASE("idempotence and translation equivariance") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss;
    std::vector<double> ys(15);
    for (double& y : ys) y = gauss(rng);
    SortedSample s = sample_on_grid(ys);
    auto fit = fit_isotonic(s);

    SortedSample refit_in = s;
    refit_in.ys = fit.fitted;
    auto refit = fit_isotonic(refit_in);
    for (std::size_t i = 0; i < s.n(); ++i)
        CHECK(refit.fitted[i] == doctest::Approx(fit.fitted[i]).epsilon(1e-12));

    SortedSample shifted = s;
    for (double& y : shifted.ys) y += 3.25;
    auto sfit = fit_isotonic(shifted);
    for (std::size_t i = 0; i < s.n(); ++i)
        CHECK(sfit.fitted[i] == doctest::Approx(fit.fitted[i] + 3.25).epsilon(1e-12));
}

TEST_CASE("block structure preserves weighted mass") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    std::vector<double> xs, ys;
    for (int i = 0; i < 30; ++i) {
        xs.push_back((i % 10) / 10.0 + 0.05);  // duplicates force pooling weights
        ys.push_back(gauss(rng));
    }
    SortedSample s = make_sorted_sample(xs, ys);
    auto fit = fit_isotonic(s);

    double lhs = 0.0, rhs = 0.0;
    for (const IsotonicBlock& b : fit.blocks) lhs += b.weight * b.mean;
    for (std::size_t i = 0; i < s.n(); ++i) rhs += s.weights[i] * s.ys[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    for (const IsotonicBlock& b : fit.blocks) {
        double wsum = 0.0, wy = 0.0;
        for (std::size_t i = b.start; i <= b.end; ++i) {
            wsum += s.weights[i];
            wy += s.weights[i] * s.ys[i];
            CHECK(fit.fitted[i] == doctest::Approx(b.mean).epsilon(1e-12));
        }
        CHECK(b.mean == doctest::Approx(wy / wsum).epsilon(1e-12));
    }
}

TEST_CASE("step extension matches fitted values at design points") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    std::vector<double> xs(25), ys(25);
    for (int i = 0; i < 25; ++i) {
        xs[i] = unif(rng);
        ys[i] = gauss(rng);
    }
    SortedSample s = make_sorted_sample(xs, ys);
    auto fit = fit_isotonic(s);
    CHECK_NOTHROW(fit.extension.validate());
    CHECK(fit.extension.isotonic);
    for (std::size_t i = 0; i < s.n(); ++i)
        CHECK(fit.extension(s.xs[i]) == doctest::Approx(fit.fitted[i]).epsilon(1e-12));
    // leftmost piece carries the first fitted value
    CHECK(fit.extension(s.xs[0] / 2) == doctest::Approx(fit.fitted[0]));
}

TEST_CASE("explicit weights change the pooled solution") {
    SortedSample s = sample_on_grid({2, 1});
    auto fit = fit_isotonic(s, {3.0, 1.0});
    CHECK(fit.fitted[0] == doctest::Approx(1.75));
    CHECK(fit.fitted[1] == doctest::Approx(1.75));
    CHECK_THROWS_AS(fit_isotonic(s, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_isotonic(s, {1.0}), std::invalid_argument);
}
