#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "rer/errors.hpp"
#include "rer/fuzzy_graph.hpp"
#include "rer/rng.hpp"
#include "rer/similarity_curve.hpp"

using namespace rer;

TEST_CASE("knn on collinear points matches geometry") {
    Matrix pts(3, 2);
    pts(0, 0) = 0.0;
    pts(1, 0) = 1.0;
    pts(2, 0) = 3.0;
    const KnnGraph g = knn_graph(pts, 2);
    // nearest neighbor of 0 is 1, of 1 is 0, of 2 is 1
    CHECK(g.index(0, 0) == 1);
    CHECK(g.index(1, 0) == 0);
    CHECK(g.index(2, 0) == 1);
    CHECK(g.dist(2, 0) == doctest::Approx(2.0));
    CHECK(g.dist(2, 1) == doctest::Approx(3.0));
}

TEST_CASE("knn allows duplicated points at distance zero") {
    Matrix pts(4, 2);
    pts(1, 0) = 0.0; // rows 0 and 1 identical
    pts(2, 0) = 5.0;
    pts(3, 0) = 6.0;
    const KnnGraph g = knn_graph(pts, 2);
    CHECK(g.index(0, 0) == 1);
    CHECK(g.dist(0, 0) == 0.0);
}

TEST_CASE("knn matches an exhaustive oracle on 200 random points") {
    Rng rng(31);
    const std::size_t n = 200, d = 8, k = 40;
    Matrix pts(n, d);
    for (std::size_t i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
    const KnnGraph g = knn_graph(pts, k);

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> all;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = pts(i, c) - pts(j, c);
                s += diff * diff;
            }
            all.emplace_back(std::sqrt(s), static_cast<int>(j));
        }
        std::sort(all.begin(), all.end());
        for (std::size_t j = 0; j < k; ++j) {
            CHECK(g.index(i, j) == all[j].second);
            CHECK(g.dist(i, j) == doctest::Approx(all[j].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("knn rejects k >= n with a helpful message") {
    Matrix pts(5, 2);
    CHECK_THROWS_WITH_AS(knn_graph(pts, 5), doctest::Contains("lower k"), ValidationError);
    CHECK_THROWS_AS(knn_graph(pts, 1), ValidationError);
}

TEST_CASE("smooth-knn sigma solves the calibration equation") {
    const double dists[4] = {1, 2, 3, 4};
    const SmoothKnn cal = smooth_knn_calibration(dists, 4);
    CHECK(cal.rho == 1.0);

    // oracle: scalar bisection to machine precision on the same equation
    const auto f = [&](double sigma) {
        double s = 0.0;
        for (const double d : dists) s += std::exp(-std::max(0.0, d - 1.0) / sigma);
        return s;
    };
    double lo = 1e-12, hi = 1e6;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 2.0 ? hi : lo) = mid;
    }
    const double sigma_star = 0.5 * (lo + hi);
    CHECK(f(cal.sigma) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(cal.sigma == doctest::Approx(sigma_star).epsilon(1e-3));
}

TEST_CASE("smooth-knn scale equivariance: doubling distances doubles rho and sigma") {
    const double dists[5] = {0.5, 0.8, 1.1, 1.7, 2.0};
    double doubled[5];
    for (int i = 0; i < 5; ++i) doubled[i] = 2.0 * dists[i];
    const SmoothKnn a = smooth_knn_calibration(dists, 5);
    const SmoothKnn b = smooth_knn_calibration(doubled, 5);
    CHECK(b.rho == doctest::Approx(2.0 * a.rho).epsilon(1e-12));
    CHECK(b.sigma == doctest::Approx(2.0 * a.sigma).epsilon(1e-3));
}

TEST_CASE("smooth-knn degenerate rows") {
    SUBCASE("all zero distances give sigma 1") {
        const double z[3] = {0, 0, 0};
        const SmoothKnn cal = smooth_knn_calibration(z, 3);
        CHECK(cal.sigma == 1.0);
    }
    SUBCASE("all distances equal rho clamp at the upper bound") {
        const double eq[4] = {2, 2, 2, 2};
        const SmoothKnn cal = smooth_knn_calibration(eq, 4);
        CHECK(cal.sigma == doctest::Approx(1e3 * 2.0));
    }
}

TEST_CASE("fuzzy union arithmetic") {
    CHECK(fuzzy_union(1.0, 1.0) == 1.0);
    CHECK(fuzzy_union(0.7, 0.0) == 0.7);
    CHECK(fuzzy_union(0.5, 0.5) == 0.75);
}

TEST_CASE("fuzzy graph: symmetric, no self edges, weights in (0,1], nearest weight 1") {
    Rng rng(5);
    Matrix pts(60, 4);
    for (std::size_t i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
    const FuzzyGraph graph = build_fuzzy_graph(pts, 8);

    std::map<std::pair<int, int>, double> weight;
    for (const auto& e : graph.edges) {
        CHECK(e.from != e.to);
        CHECK(e.weight > 0.0);
        CHECK(e.weight <= 1.0);
        weight[{e.from, e.to}] = e.weight;
    }
    for (const auto& e : graph.edges) {
        REQUIRE(weight.count({e.to, e.from}) == 1);
        CHECK(weight[{e.to, e.from}] == e.weight);
    }
    // before union each vertex's nearest-neighbor weight is exp(0) = 1, and
    // union with anything keeps it exactly 1
    for (std::size_t i = 0; i < graph.n_vertices; ++i) {
        const int nn = graph.knn.index(i, 0);
        CHECK(weight[{static_cast<int>(i), nn}] == 1.0);
    }
}

TEST_CASE("graph construction is deterministic") {
    Rng rng(6);
    Matrix pts(50, 3);
    for (std::size_t i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
    const FuzzyGraph a = build_fuzzy_graph(pts, 6);
    const FuzzyGraph b = build_fuzzy_graph(pts, 6);
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].from == b.edges[i].from);
        CHECK(a.edges[i].to == b.edges[i].to);
        CHECK(a.edges[i].weight == b.edges[i].weight);
    }
}

TEST_CASE("similarity curve fit reaches the least-squares optimum for spread 1, min_dist 0.1") {
    // frozen from an independent dense grid-search oracle over (a, b); the
    // optimum concentrates its error at the kink of the target, max |q - psi|
    // = 0.027348 on the sample grid
    const SimilarityCurve curve = fit_similarity_curve(1.0, 0.1);
    CHECK(curve.a == doctest::Approx(1.576944).epsilon(2e-3));
    CHECK(curve.b == doctest::Approx(0.895061).epsilon(2e-3));
    double max_err = 0.0, sse = 0.0;
    for (int i = 0; i < 300; ++i) {
        const double x = 3.0 * static_cast<double>(i) / 299.0;
        const double err = curve.evaluate_raw(x) - similarity_target(x, 1.0, 0.1);
        max_err = std::max(max_err, std::abs(err));
        sse += err * err;
    }
    CHECK(max_err == doctest::Approx(0.027348).epsilon(5e-3));
    CHECK(sse == doctest::Approx(0.07863532).epsilon(1e-4));
}

TEST_CASE("similarity curve stays finite for the wide spread/min_dist pairs") {
    for (const auto& [spread, mind] : {std::pair{25.0, 24.0}, std::pair{24.0, 23.0}}) {
        const SimilarityCurve curve = fit_similarity_curve(spread, mind);
        CAPTURE(curve.a);
        CAPTURE(curve.b);
        for (int i = 1; i <= 300; ++i) {
            const double x = 3.0 * spread * static_cast<double>(i) / 300.0;
            const double q = curve.evaluate(x);
            CHECK(std::isfinite(q));
            CHECK(q >= 1e-12);
            CHECK(q <= 1.0 - 1e-12);
        }
    }
}

TEST_CASE("similarity curve rejects non-positive spread") {
    CHECK_THROWS_AS(fit_similarity_curve(0.0, 0.1), ValidationError);
    CHECK_THROWS_AS(fit_similarity_curve(-1.0, 0.1), ValidationError);
}
