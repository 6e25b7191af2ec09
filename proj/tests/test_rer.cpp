#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rer/errors.hpp"
#include "rer/rer_engine.hpp"
#include "rer/rng.hpp"

using namespace rer;

namespace {

ErrorTable make_table(std::size_t n, std::size_t n_c, std::uint64_t seed) {
    ErrorTable t;
    t.delta = Matrix(n, n_c);
    Rng rng(seed);
    for (std::size_t i = 0; i < t.delta.size(); ++i)
        t.delta.data()[i] = 0.05 + rng.uniform01() * 2.0;
    t.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) t.labels[j] = static_cast<int>(rng.below(n_c));
    return t;
}

} // namespace

TEST_CASE("chi arithmetic on fixed rows") {
    const double row1[3] = {2, 1, 4};
    CHECK(chi_of_row(row1, 3, 0) == doctest::Approx(2.0));
    const double row2[3] = {0.5, 1.0, 0.8};
    CHECK(chi_of_row(row2, 3, 0) == doctest::Approx(0.625));
    const double row3[3] = {0.7, 0.7, 0.7};
    CHECK(chi_of_row(row3, 3, 1) == doctest::Approx(1.0));
    const double row4[2] = {1.0, 0.0}; // zero denominator hits the epsilon floor
    CHECK(chi_of_row(row4, 2, 0) == doctest::Approx(1.0 / 1e-12));
}

TEST_CASE("chi_bar over identical rows and a two-sample average") {
    ErrorTable t;
    t.delta = Matrix(2, 3);
    const double vals[6] = {1, 2, 4, 3, 2, 4}; // chi = 0.5 and 1.5
    for (int i = 0; i < 6; ++i) t.delta.data()[i] = vals[i];
    t.labels = {0, 0};
    CHECK(chi_bar(t) == doctest::Approx(1.0));
}

TEST_CASE("chi_0 and chi_rand fixed examples") {
    ErrorTable t;
    t.delta = Matrix(1, 3);
    t.delta(0, 0) = 1;
    t.delta(0, 1) = 3;
    t.delta(0, 2) = 5;
    t.labels = {0};
    CHECK(chi_0(t) == doctest::Approx(0.25)); // 1 / mean(3,5)
    CHECK(chi_rand(t) == doctest::Approx(0.25)); // best=1, rand=4

    SUBCASE("all-equal columns give 1") {
        ErrorTable u;
        u.delta = Matrix(4, 3, 0.7);
        u.labels = {0, 1, 2, 0};
        CHECK(chi_0(u) == doctest::Approx(1.0));
        CHECK(chi_rand(u) == doctest::Approx(1.0));
        for (const double c : chi_scores(u)) CHECK(c == doctest::Approx(1.0));
    }
    SUBCASE("two classes: delta_rand is the single other column") {
        ErrorTable u;
        u.delta = Matrix(1, 2);
        u.delta(0, 0) = 0.3;
        u.delta(0, 1) = 0.6;
        u.labels = {0};
        CHECK(chi_0(u) == doctest::Approx(0.5));
    }
}

TEST_CASE("chi_rand never exceeds chi_0 (row dominance property)") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ErrorTable t = make_table(50, 2 + seed % 5, seed);
        CHECK(chi_rand(t) <= chi_0(t) + 1e-12);
    }
}

TEST_CASE("chi is invariant to scaling a whole row") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> row(5);
        for (auto& v : row) v = 0.1 + rng.uniform01();
        const int label = static_cast<int>(rng.below(5));
        const double lambda = 0.01 + rng.uniform01() * 50.0;
        std::vector<double> scaled = row;
        for (auto& v : scaled) v *= lambda;
        CHECK(chi_of_row(scaled.data(), 5, label) ==
              doctest::Approx(chi_of_row(row.data(), 5, label)).epsilon(1e-12));
    }
}

TEST_CASE("report scalars are invariant to a joint column/label permutation") {
    const ErrorTable t = make_table(80, 4, 5);
    const RerReport base = compute_report(t);

    const int perm[4] = {2, 0, 3, 1}; // new column index per old class
    ErrorTable p;
    p.delta = Matrix(t.n_samples(), 4);
    p.labels.resize(t.n_samples());
    for (std::size_t j = 0; j < t.n_samples(); ++j) {
        for (int c = 0; c < 4; ++c) p.delta(j, static_cast<std::size_t>(perm[c])) = t.delta(j, static_cast<std::size_t>(c));
        p.labels[j] = perm[t.labels[j]];
    }
    const RerReport permuted = compute_report(p);
    CHECK(permuted.chi_bar == doctest::Approx(base.chi_bar).epsilon(1e-12));
    CHECK(permuted.chi_0 == doctest::Approx(base.chi_0).epsilon(1e-12));
    CHECK(permuted.chi_rand == doctest::Approx(base.chi_rand).epsilon(1e-12));
    CHECK(permuted.eta_hat_raw == doctest::Approx(base.eta_hat_raw).epsilon(1e-10));
    for (int c = 0; c < 4; ++c)
        CHECK(permuted.per_class_chi[static_cast<std::size_t>(perm[c])] ==
              doctest::Approx(base.per_class_chi[static_cast<std::size_t>(c)]).epsilon(1e-12));
    for (std::size_t j = 0; j < t.n_samples(); ++j)
        CHECK(permuted.chi[j] == doctest::Approx(base.chi[j]).epsilon(1e-12));
}

TEST_CASE("chi below 1 iff the labeled class is the strict row minimum") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> row(4);
        for (auto& v : row) v = 0.1 + rng.uniform01();
        const int label = static_cast<int>(rng.below(4));
        double strict_min = 1e18;
        for (int c = 0; c < 4; ++c)
            if (c != label) strict_min = std::min(strict_min, row[static_cast<std::size_t>(c)]);
        const bool labeled_strict_min = row[static_cast<std::size_t>(label)] < strict_min;
        CHECK((chi_of_row(row.data(), 4, label) < 1.0) == labeled_strict_min);
    }
}

TEST_CASE("noise estimate endpoints and monotonicity in chi_0") {
    SUBCASE("chi_0 equal to chi_rand gives zero") {
        ErrorTable t;
        t.delta = Matrix(3, 3, 0.5);
        t.labels = {0, 1, 2};
        // columns equal: chi_0 = chi_rand = 1 -> degenerate, so perturb to
        // make the labeled class the row minimum everywhere
        for (std::size_t j = 0; j < 3; ++j) t.delta(j, static_cast<std::size_t>(t.labels[j])) = 0.2;
        const NoiseEstimate est = estimate_noise(t);
        CHECK(est.raw == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(est.eta_hat == 0.0);
    }
    SUBCASE("chi_0 = 1 gives eta = 1") {
        // build rows where the labeled delta equals delta_rand but the row
        // minimum is lower
        ErrorTable t;
        t.delta = Matrix(2, 3);
        t.labels = {0, 0};
        for (std::size_t j = 0; j < 2; ++j) {
            t.delta(j, 0) = 0.5; // labeled
            t.delta(j, 1) = 0.3;
            t.delta(j, 2) = 0.7; // rand = 0.5 -> ratio 1, best = 0.3
        }
        const NoiseEstimate est = estimate_noise(t);
        CHECK(est.raw == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("degenerate table rejected") {
        ErrorTable t;
        t.delta = Matrix(3, 3, 0.4);
        t.labels = {0, 1, 2};
        CHECK_THROWS_WITH_AS(estimate_noise(t), doctest::Contains("degenerate"),
                             ValidationError);
    }
    SUBCASE("eta_hat is monotone in chi_0 for fixed chi_rand") {
        const double cr = 0.4;
        double prev = -1.0;
        for (double c0 = 0.4; c0 <= 1.2; c0 += 0.1) {
            const double eta = (c0 - cr) / (1.0 - cr);
            CHECK(eta > prev);
            prev = eta;
        }
    }
}

TEST_CASE("ratio operations require at least two classes") {
    ErrorTable t;
    t.delta = Matrix(3, 1, 0.5);
    t.labels = {0, 0, 0};
    CHECK_THROWS_AS(chi_scores(t), ValidationError);
    CHECK_THROWS_AS(chi_0(t), ValidationError);
}

TEST_CASE("clamped eta keeps the raw value") {
    ErrorTable t;
    t.delta = Matrix(2, 3);
    t.labels = {0, 0};
    for (std::size_t j = 0; j < 2; ++j) {
        t.delta(j, 0) = 1.2; // labeled error above the random mean
        t.delta(j, 1) = 0.3;
        t.delta(j, 2) = 0.7;
    }
    const NoiseEstimate est = estimate_noise(t);
    CHECK(est.raw > 1.0);
    CHECK(est.eta_hat == 1.0);
}
