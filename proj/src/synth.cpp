#include "rer/synth.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "rer/errors.hpp"
#include "rer/rng.hpp"

namespace rer {

void SynthSpec::validate() const {
    if (n_classes < 1) throw ConfigError("n_classes must be positive");
    if (samples_per_class < 1) throw ConfigError("samples_per_class must be positive");
    if (dim < 2) throw ConfigError("dim must be >= 2");
    if (!(cluster_std > 0.0)) throw ConfigError("cluster_std must be positive");
    if (!(separation >= 0.0)) throw ConfigError("separation must be >= 0");
}

SynthSpec synth_spec_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid synth spec json: ") + e.what());
    }
    const std::set<std::string> known = {"n_classes", "samples_per_class", "dim",
                                         "cluster_std", "separation", "manifold", "seed"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown synth spec key '" + key + "'");

    SynthSpec spec;
    if (j.contains("n_classes")) spec.n_classes = j["n_classes"].get<int>();
    if (j.contains("samples_per_class")) spec.samples_per_class = j["samples_per_class"].get<int>();
    if (j.contains("dim")) spec.dim = j["dim"].get<int>();
    if (j.contains("cluster_std")) spec.cluster_std = j["cluster_std"].get<double>();
    if (j.contains("separation")) spec.separation = j["separation"].get<double>();
    if (j.contains("manifold")) {
        const std::string m = j["manifold"].get<std::string>();
        if (m == "gaussian_blob")
            spec.manifold = SynthManifold::GaussianBlob;
        else if (m == "low_rank_gaussian")
            spec.manifold = SynthManifold::LowRankGaussian;
        else
            throw ConfigError("unknown manifold '" + m + "'");
    }
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    spec.validate();
    return spec;
}

SynthSpec synth_spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return synth_spec_from_json_text(text);
}

FeatureDataset generate_synth(const SynthSpec& spec) {
    spec.validate();
    const std::size_t n_c = static_cast<std::size_t>(spec.n_classes);
    const std::size_t per = static_cast<std::size_t>(spec.samples_per_class);
    const std::size_t d = static_cast<std::size_t>(spec.dim);
    const std::size_t n = n_c * per;

    Rng centroid_rng = derive_stream(spec.seed, "synth.centroids");
    Matrix centroids(n_c, d);
    for (std::size_t c = 0; c < n_c; ++c) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double g = centroid_rng.normal();
            centroids(c, j) = g;
            norm += g * g;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) norm = 1.0;
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) *= spec.separation / norm;
    }

    Matrix features(n, d);
    std::vector<int> labels(n);
    const std::size_t rank = (d + 3) / 4;

    for (std::size_t c = 0; c < n_c; ++c) {
        Rng rng = derive_stream(spec.seed, "synth.samples", c);
        Matrix mixing; // d x rank, low-rank variant only
        if (spec.manifold == SynthManifold::LowRankGaussian) {
            mixing = Matrix(d, rank);
            const double scale = spec.cluster_std / std::sqrt(static_cast<double>(rank));
            for (std::size_t i = 0; i < mixing.size(); ++i)
                mixing.data()[i] = rng.normal() * scale;
        }
        std::vector<double> z(rank);
        for (std::size_t s = 0; s < per; ++s) {
            const std::size_t row = c * per + s;
            labels[row] = static_cast<int>(c);
            double* x = features.row(row);
            if (spec.manifold == SynthManifold::GaussianBlob) {
                for (std::size_t j = 0; j < d; ++j)
                    x[j] = centroids(c, j) + spec.cluster_std * rng.normal();
            } else {
                for (std::size_t r = 0; r < rank; ++r) z[r] = rng.normal();
                for (std::size_t j = 0; j < d; ++j) {
                    double v = centroids(c, j);
                    for (std::size_t r = 0; r < rank; ++r) v += mixing(j, r) * z[r];
                    x[j] = v;
                }
            }
        }
    }

    auto [normalized, params] = min_max_normalize(features);
    (void)params;

    FeatureDataset ds;
    ds.features = std::move(normalized);
    ds.noisy_labels = labels;
    ds.clean_labels = labels;
    ds.n_classes = spec.n_classes;
    ds.label_values.resize(n_c);
    for (std::size_t c = 0; c < n_c; ++c) ds.label_values[c] = static_cast<long long>(c);
    ds.validate();
    return ds;
}

} // namespace rer
