#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rer/errors.hpp"
#include "rer/model_bundle.hpp"
#include "rer/pipeline.hpp"
#include "rer/rng.hpp"
#include "rer/synth.hpp"

using namespace rer;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

ModelBundle small_bundle() {
    ModelBundle bundle;
    bundle.config.hidden_dims = {16};
    bundle.config.latent_dim = 3;
    bundle.config.seed = 123;
    bundle.normalization.min = {0.0, -1.0, 2.0, 0.5};
    bundle.normalization.max = {1.0, 3.0, 2.0, 0.75};
    for (int c = 0; c < 3; ++c) {
        Reconstructor rec;
        Rng init(static_cast<std::uint64_t>(c) + 50);
        rec.net = make_network(4, bundle.config, init);
        rec.class_id = c;
        rec.diagnostics.final_loss = 1.25 + c;
        rec.diagnostics.epochs_run = 7;
        rec.diagnostics.early_stopped = c == 1;
        bundle.reconstructors.push_back(std::move(rec));
        bundle.label_values.push_back(c * 10);
        bundle.class_names.push_back("class_" + std::to_string(c));
    }
    return bundle;
}

} // namespace

TEST_CASE("bundle round-trip is bit exact") {
    const ModelBundle bundle = small_bundle();
    const auto path = temp_path("rer_t_bundle.rerb");
    save_bundle(path, bundle);
    const ModelBundle back = load_bundle(path);

    REQUIRE(back.reconstructors.size() == 3);
    CHECK(back.config.seed == bundle.config.seed);
    CHECK(back.config.hidden_dims == bundle.config.hidden_dims);
    CHECK(back.normalization.min == bundle.normalization.min);
    CHECK(back.normalization.max == bundle.normalization.max);
    CHECK(back.label_values == bundle.label_values);
    CHECK(back.class_names == bundle.class_names);
    for (std::size_t c = 0; c < 3; ++c) {
        const Network& a = bundle.reconstructors[c].net;
        const Network& b = back.reconstructors[c].net;
        REQUIRE(a.encoder.size() == b.encoder.size());
        for (std::size_t l = 0; l < a.encoder.size(); ++l) {
            CHECK(a.encoder[l].w == b.encoder[l].w); // bitwise: doubles stored raw
            CHECK(a.encoder[l].b == b.encoder[l].b);
            CHECK(a.encoder[l].act == b.encoder[l].act);
        }
        for (std::size_t l = 0; l < a.decoder.size(); ++l) {
            CHECK(a.decoder[l].w == b.decoder[l].w);
            CHECK(a.decoder[l].b == b.decoder[l].b);
        }
        CHECK(back.reconstructors[c].diagnostics.epochs_run == 7);
        CHECK(back.reconstructors[c].diagnostics.final_loss ==
              bundle.reconstructors[c].diagnostics.final_loss);
    }
}

TEST_CASE("unknown version and truncation are explicit errors") {
    const ModelBundle bundle = small_bundle();
    const auto path = temp_path("rer_t_bundle2.rerb");
    save_bundle(path, bundle);

    SUBCASE("version tag bumped") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        const std::uint32_t bad = 99;
        f.write(reinterpret_cast<const char*>(&bad), 4);
        f.close();
        CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("version"), FormatError);
    }
    SUBCASE("file truncated") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 100);
        CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("truncated"), FormatError);
    }
    SUBCASE("not a bundle") {
        std::ofstream(path, std::ios::trunc) << "plain text";
        CHECK_THROWS_AS(load_bundle(path), FormatError);
    }
}

TEST_CASE("dimension mismatch surfaces at inference") {
    SynthSpec spec;
    spec.n_classes = 2;
    spec.samples_per_class = 50;
    spec.dim = 8;
    spec.seed = 6;
    const FeatureDataset ds = generate_synth(spec);
    AutoencoderConfig cfg;
    cfg.hidden_dims = {16};
    cfg.latent_dim = 3;
    cfg.n_neighbors = 8;
    cfg.n_epochs = 2;
    const DifficultyResult res = run_difficulty(ds, cfg, 1);

    const auto path = temp_path("rer_t_bundle3.rerb");
    save_bundle(path, res.bundle);
    const ModelBundle back = load_bundle(path);

    Matrix wrong(10, 6);
    CHECK_THROWS_WITH_AS(score_with_bundle(back, wrong, std::vector<int>(10, 0)),
                         doctest::Contains("dimension"), ValidationError);
}

TEST_CASE("scoring a reloaded bundle reproduces the original table exactly") {
    SynthSpec spec;
    spec.n_classes = 3;
    spec.samples_per_class = 40;
    spec.dim = 8;
    spec.seed = 9;
    const FeatureDataset ds = generate_synth(spec);
    AutoencoderConfig cfg;
    cfg.hidden_dims = {16};
    cfg.latent_dim = 3;
    cfg.n_neighbors = 8;
    cfg.n_epochs = 2;
    const DifficultyResult res = run_difficulty(ds, cfg, 1);

    const auto path = temp_path("rer_t_bundle4.rerb");
    save_bundle(path, res.bundle);
    const ModelBundle back = load_bundle(path);
    const ErrorTable rescored = score_with_bundle(back, ds.features, ds.noisy_labels, 1);
    CHECK(rescored.delta == res.table.delta);
}
