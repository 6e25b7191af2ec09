#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rer/analytics.hpp"
#include "rer/errors.hpp"
#include "rer/rng.hpp"

using namespace rer;

TEST_CASE("gaussian fit on a million normal draws has high R^2") {
    Rng rng(1);
    std::vector<double> values(1000000);
    for (auto& v : values) v = 3.0 + 0.5 * rng.normal();
    const GaussianFit fit = fit_gaussian(values);
    CHECK(fit.mean == doctest::Approx(3.0).epsilon(0.01));
    CHECK(fit.std_dev == doctest::Approx(0.5).epsilon(0.01));
    CHECK(fit.r_squared > 0.95);
}

TEST_CASE("gaussian fit on two-point bimodal data has low R^2") {
    Rng rng(2);
    std::vector<double> values(20000);
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = (i % 2 == 0 ? -2.0 : 2.0) + 0.05 * rng.normal();
    const GaussianFit fit = fit_gaussian(values);
    CHECK(fit.r_squared < 0.5);
}

TEST_CASE("gaussian fit rejects constant data") {
    const std::vector<double> constant(100, 1.5);
    CHECK_THROWS_WITH_AS(fit_gaussian(constant), doctest::Contains("zero variance"),
                         ValidationError);
}

TEST_CASE("spearman endpoints and oracle composition") {
    const std::vector<double> a = {1, 2, 3, 4, 5};
    const std::vector<double> up = {10, 20, 30, 40, 50};
    const std::vector<double> down = {5, 4, 3, 2, 1};
    CHECK(spearman(a, up) == doctest::Approx(1.0));
    CHECK(spearman(a, down) == doctest::Approx(-1.0));

    // oracle: rank both then pearson, computed independently here
    Rng rng(3);
    std::vector<double> x(60), y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        x[i] = rng.normal();
        y[i] = 0.4 * x[i] + rng.normal();
    }
    const auto rx = mid_ranks(x);
    const auto ry = mid_ranks(y);
    CHECK(spearman(x, y) == doctest::Approx(pearson(rx, ry)).epsilon(1e-12));
}

TEST_CASE("spearman and ndcg are invariant to strictly increasing transforms") {
    Rng rng(4);
    std::vector<double> a(40), b(40);
    for (std::size_t i = 0; i < 40; ++i) {
        a[i] = rng.uniform01() * 4.0;
        b[i] = rng.uniform01() * 4.0;
    }
    std::vector<double> ta(40);
    for (std::size_t i = 0; i < 40; ++i) ta[i] = std::exp(0.7 * a[i]) - 2.0;
    CHECK(spearman(ta, b) == doctest::Approx(spearman(a, b)).epsilon(1e-12));
    // ndcg ranks by a; a monotone transform of a keeps the ranking
    CHECK(ndcg(ta, b) == doctest::Approx(ndcg(a, b)).epsilon(1e-9));
}

TEST_CASE("ndcg basics and 5-element brute-force oracle") {
    const std::vector<double> v = {0.9, 0.5, 0.1, 0.7, 0.3};
    CHECK(ndcg(v, v) == doctest::Approx(1.0));
    CHECK(ndcg({3.0}, {42.0}) == doctest::Approx(1.0));

    const std::vector<double> a = {0.2, 0.9, 0.4, 0.6, 0.1};
    const std::vector<double> b = {1.0, 0.3, 0.8, 0.2, 0.5};
    // oracle: direct formula with explicit normalization
    const auto norm = [](std::vector<double> s) {
        const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
        const double l = *lo, h = *hi;
        for (auto& x : s) x = (x - l) / (h - l);
        return s;
    };
    const auto an = norm(a);
    const auto rel = norm(b);
    std::vector<std::size_t> order = {0, 1, 2, 3, 4};
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return an[x] > an[y]; });
    std::vector<double> ideal = rel;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double dcg = 0, idcg = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        dcg += rel[order[i]] / std::log2(static_cast<double>(i) + 2.0);
        idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
    }
    CHECK(ndcg(a, b) == doctest::Approx(dcg / idcg).epsilon(1e-12));
}

TEST_CASE("pearson endpoints and 5-point hand computation") {
    const std::vector<double> a = {1, 2, 3, 4, 5};
    std::vector<double> minus(5);
    for (std::size_t i = 0; i < 5; ++i) minus[i] = -a[i];
    CHECK(pearson(a, a) == doctest::Approx(1.0));
    CHECK(pearson(a, minus) == doctest::Approx(-1.0));

    // hand computation: x = {1,2,3,4,5}, y = {2,1,4,3,7}
    // mx = 3, my = 3.4; sxy = 12, sxx = 10, syy = 21.2
    const std::vector<double> y = {2, 1, 4, 3, 7};
    CHECK(pearson(a, y) == doctest::Approx(12.0 / std::sqrt(10.0 * 21.2)).epsilon(1e-12));

    CHECK_THROWS_AS(pearson(a, std::vector<double>(5, 2.0)), ValidationError);
    CHECK_THROWS_AS(pearson(a, {1.0, 2.0}), ValidationError);
}

TEST_CASE("mid-rank ties average their positions") {
    const std::vector<double> v = {3.0, 1.0, 3.0, 2.0};
    const auto r = mid_ranks(v);
    CHECK(r[1] == 1.0);
    CHECK(r[3] == 2.0);
    CHECK(r[0] == doctest::Approx(3.5));
    CHECK(r[2] == doctest::Approx(3.5));
}
