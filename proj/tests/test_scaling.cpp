#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rer/errors.hpp"
#include "rer/pipeline.hpp"
#include "rer/rer_engine.hpp"
#include "rer/rng.hpp"
#include "rer/scaling.hpp"
#include "rer/synth.hpp"

using namespace rer;

namespace {

std::vector<ScalingPoint> curve_points(double chi_inf, double g1, double g2, double g0,
                                       const std::vector<double>& ns, double rel_noise,
                                       std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ScalingPoint> pts;
    for (const double n : ns) {
        const double t = std::pow(n, g0);
        double y = (chi_inf * t + g1) / (t + g2);
        if (rel_noise > 0.0) y *= 1.0 + rel_noise * rng.normal();
        pts.push_back({n, y});
    }
    return pts;
}

} // namespace

TEST_CASE("exact curve data recovers the parameters to 1e-6 relative") {
    const std::vector<double> ns = {20, 35, 60, 100, 180, 320, 560, 1000, 2000};
    const auto pts = curve_points(0.85, 2e4, 2.01e4, 1.808, ns, 0.0, 0);
    const ScalingFit fit = fit_scaling(pts);
    CHECK(std::abs(fit.chi_inf - 0.85) / 0.85 < 1e-6);
    CHECK(std::abs(fit.gamma1 - 2e4) / 2e4 < 1e-4);
    CHECK(std::abs(fit.gamma2 - 2.01e4) / 2.01e4 < 1e-4);
    CHECK(fit.r_squared > 1.0 - 1e-10);
    SUBCASE("fit evaluations reproduce the points used for r_squared") {
        for (const auto& p : pts)
            CHECK(fit.evaluate(p.n) == doctest::Approx(p.chi_bar).epsilon(1e-6));
    }
}

TEST_CASE("noisy curve data recovers chi_inf within 0.02 with R^2 >= 0.99") {
    // budgets concentrated at both ends so the curve's swing dominates the
    // 0.5% noise floor in the R^2 denominator
    const std::vector<double> ns = {20,  22,  25,  28,   32,   36,   40,   200,
                                    260, 340, 900, 1100, 1300, 1550, 1800, 2000};
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto pts = curve_points(0.85, 2e4, 2.01e4, 1.808, ns, 0.005, seed);
        const ScalingFit fit = fit_scaling(pts);
        CHECK(std::abs(fit.chi_inf - 0.85) <= 0.02);
        CHECK(fit.r_squared >= 0.99);
    }
}

TEST_CASE("constant points give a degenerate but accepted fit") {
    std::vector<ScalingPoint> pts;
    for (const double n : {20.0, 50.0, 100.0, 400.0}) pts.push_back({n, 0.77});
    const ScalingFit fit = fit_scaling(pts);
    CHECK(fit.chi_inf == doctest::Approx(0.77).epsilon(1e-6));
    CHECK(fit.r_squared == 1.0);
}

TEST_CASE("series crossing 1 is flagged, not refused") {
    std::vector<ScalingPoint> pts = {{20, 1.10}, {50, 1.02}, {100, 0.97}, {400, 0.93}};
    const ScalingFit fit = fit_scaling(pts);
    CHECK(fit.crosses_one);
    std::vector<ScalingPoint> below = {{20, 0.99}, {50, 0.95}, {100, 0.92}, {400, 0.90}};
    CHECK_FALSE(fit_scaling(below).crosses_one);
}

TEST_CASE("gamma0 is overridable") {
    const std::vector<double> ns = {20, 50, 120, 300, 800};
    const auto pts = curve_points(0.9, 500.0, 520.0, 1.2, ns, 0.0, 0);
    const ScalingFit fit = fit_scaling(pts, 1.2);
    CHECK(fit.gamma0 == 1.2);
    CHECK(std::abs(fit.chi_inf - 0.9) < 1e-5);
}

TEST_CASE("fit_scaling input validation") {
    std::vector<ScalingPoint> three = {{20, 1.0}, {50, 0.9}, {100, 0.8}};
    CHECK_THROWS_AS(fit_scaling(three), ValidationError);
}

TEST_CASE("finite_size_gap arithmetic") {
    ScalingFit fit;
    fit.chi_inf = 0.9;
    CHECK(finite_size_gap(0.9, fit) == 0.0);
    CHECK(finite_size_gap(0.85, fit) == doctest::Approx(0.05));
    fit.chi_inf = 0.8;
    CHECK(finite_size_gap(0.85, fit) == doctest::Approx(-0.05)); // negative passes through
}

TEST_CASE("chi_bar_n decreases with the training budget on separable data below 1") {
    SynthSpec spec;
    spec.n_classes = 3;
    spec.samples_per_class = 200;
    spec.dim = 8;
    spec.separation = 8.0;
    spec.seed = 7;
    const FeatureDataset ds = generate_synth(spec);

    AutoencoderConfig cfg;
    cfg.hidden_dims = {32};
    cfg.latent_dim = 4;
    cfg.n_neighbors = 10;
    cfg.dropout = 0.2;
    cfg.seed = 7;
    const auto pts = size_sweep(ds, {20, 60, 200}, cfg, 1, 1);
    REQUIRE(pts.size() == 3);
    CHECK(pts[2].chi_bar < 1.0);
    CHECK(pts[1].chi_bar < pts[0].chi_bar);
    CHECK(pts[2].chi_bar < pts[1].chi_bar);
}

TEST_CASE("size sweep validates budgets and matches the plain pipeline at full budget") {
    SynthSpec spec;
    spec.n_classes = 3;
    spec.samples_per_class = 60;
    spec.dim = 8;
    spec.seed = 2;
    const FeatureDataset ds = generate_synth(spec);

    AutoencoderConfig cfg;
    cfg.hidden_dims = {32};
    cfg.latent_dim = 4;
    cfg.n_neighbors = 10;
    cfg.n_epochs = 3;
    cfg.seed = 9;

    CHECK_THROWS_WITH_AS(size_sweep(ds, {61}, cfg), doctest::Contains("exceeds class"),
                         ValidationError);
    CHECK_THROWS_AS(size_sweep(ds, {2}, cfg), ValidationError);

    // full budget reproduces the unsubsampled pipeline exactly
    const auto pts = size_sweep(ds, {30, 60}, cfg, 1, 1);
    REQUIRE(pts.size() == 2);

    const auto [normalized, params] = min_max_normalize(ds.features);
    const auto recs = fit_reconstructors(normalized, ds.noisy_labels, 3, cfg, 1);
    ErrorTable table;
    table.delta = error_table(recs, normalized, 1);
    table.labels = ds.noisy_labels;
    CHECK(std::abs(pts[1].chi_bar - chi_bar(table)) <= 1e-12);
    CHECK(pts[0].chi_bar != pts[1].chi_bar);
}
