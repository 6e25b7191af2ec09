#include "rer/pipeline.hpp"

#include <string>

#include "rer/errors.hpp"
#include "rer/parallel.hpp"
#include "rer/rng.hpp"

namespace rer {

std::vector<Reconstructor> fit_reconstructors(
    const Matrix& normalized, const std::vector<int>& labels, int n_classes,
    const AutoencoderConfig& config, unsigned threads,
    const std::vector<std::vector<int>>* subset_indices) {
    const std::size_t d = normalized.cols();

    std::vector<std::vector<int>> class_rows(static_cast<std::size_t>(n_classes));
    if (subset_indices) {
        class_rows = *subset_indices;
        if (class_rows.size() != static_cast<std::size_t>(n_classes))
            throw ValidationError("subset index list does not cover every class");
    } else {
        for (std::size_t j = 0; j < labels.size(); ++j)
            class_rows[static_cast<std::size_t>(labels[j])].push_back(static_cast<int>(j));
    }

    std::vector<Reconstructor> reconstructors(static_cast<std::size_t>(n_classes));
    parallel_for(static_cast<std::size_t>(n_classes), resolve_threads(threads),
                 [&](std::size_t begin, std::size_t end) {
                     for (std::size_t c = begin; c < end; ++c) {
                         const auto& rows = class_rows[c];
                         if (rows.empty())
                             throw TrainingError("class " + std::to_string(c) +
                                                 " has no samples");
                         Matrix subset(rows.size(), d);
                         for (std::size_t i = 0; i < rows.size(); ++i) {
                             const double* src = normalized.row(static_cast<std::size_t>(rows[i]));
                             std::copy(src, src + d, subset.row(i));
                         }
                         const std::uint64_t seed =
                             hash_combine(hash_combine(config.seed, hash_tag("train")), c);
                         reconstructors[c] = train_class_reconstructor(
                             subset, config, seed, static_cast<int>(c));
                     }
                 });
    return reconstructors;
}

DifficultyResult run_difficulty(const FeatureDataset& dataset, const AutoencoderConfig& config,
                                unsigned threads) {
    dataset.validate();
    if (dataset.n_classes < 2)
        throw ValidationError("difficulty analysis needs at least 2 classes");

    DifficultyResult out;
    auto [normalized, params] = min_max_normalize(dataset.features);
    out.normalized = std::move(normalized);

    out.bundle.config = config;
    out.bundle.normalization = std::move(params);
    out.bundle.label_values = dataset.label_values;
    out.bundle.class_names = dataset.class_names;
    out.bundle.reconstructors = fit_reconstructors(out.normalized, dataset.noisy_labels,
                                                   dataset.n_classes, config, threads);

    out.table.delta = error_table(out.bundle.reconstructors, out.normalized, threads);
    out.table.labels = dataset.noisy_labels;
    out.report = compute_report(out.table);
    return out;
}

ErrorTable score_with_bundle(const ModelBundle& bundle, const Matrix& raw_features,
                             const std::vector<int>& labels, unsigned threads) {
    if (labels.size() != raw_features.rows())
        throw ValidationError("label count does not match feature rows");
    const Matrix normalized = apply_normalization(raw_features, bundle.normalization);
    ErrorTable table;
    table.delta = error_table(bundle.reconstructors, normalized, threads);
    table.labels = labels;
    table.validate();
    return table;
}

} // namespace rer
