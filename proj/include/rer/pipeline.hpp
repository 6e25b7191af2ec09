#pragma once

#include <cstdint>
#include <vector>

#include "rer/config.hpp"
#include "rer/dataset.hpp"
#include "rer/model_bundle.hpp"
#include "rer/rer_engine.hpp"

namespace rer {

// Trains one reconstructor per class on the already-normalized features.
// subset_indices, when given, selects the training rows per class (used by
// the size sweep); otherwise every row of the class is used in index order.
// Per-class seeds derive from config.seed, so results do not depend on the
// worker count.
std::vector<Reconstructor> fit_reconstructors(
    const Matrix& normalized, const std::vector<int>& labels, int n_classes,
    const AutoencoderConfig& config, unsigned threads = 0,
    const std::vector<std::vector<int>>* subset_indices = nullptr);

struct DifficultyResult {
    ModelBundle bundle;
    Matrix normalized;
    ErrorTable table;
    RerReport report;
};

// fit + score in one pass: normalize, train per class, evaluate the error
// table on the full dataset, compute every ratio.
DifficultyResult run_difficulty(const FeatureDataset& dataset, const AutoencoderConfig& config,
                                unsigned threads = 0);

// Score an existing bundle against (possibly new) features and labels.
ErrorTable score_with_bundle(const ModelBundle& bundle, const Matrix& raw_features,
                             const std::vector<int>& labels, unsigned threads = 0);

} // namespace rer
