#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rer/matrix.hpp"

namespace rer {

enum class NoiseKind { Symmetric, Asymmetric, Confidence, Annotator };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::Symmetric;
    double rate = 0.0; // eta in [0, 1]
    std::uint64_t seed = 0;
    std::optional<Matrix> predictions;           // N x n_classes, confidence kind
    std::optional<std::vector<int>> annotator_labels; // length N, annotator kind
};

struct NoiseResult {
    std::vector<int> noisy_labels;
    std::vector<bool> mistake_mask; // true exactly where noisy != input
};

// Each sample corrupted independently with probability eta; the corrupted
// label is drawn uniformly from the other n_classes - 1 classes.
NoiseResult inject_symmetric(const std::vector<int>& labels, int n_classes, double eta,
                             std::uint64_t seed);

// Corrupted labels become (c + 1) mod n_classes.
NoiseResult inject_asymmetric(const std::vector<int>& labels, int n_classes, double eta,
                              std::uint64_t seed);

// Corrupted label = argmax over classes != clean label of the prediction row;
// ties break to the lowest class index.
NoiseResult inject_confidence(const std::vector<int>& labels, const Matrix& predictions,
                              double eta, std::uint64_t seed);

// Exactly round(eta * N) samples carry the annotator label, drawn without
// replacement from the annotator/clean disagreement set.
NoiseResult subsample_annotator(const std::vector<int>& clean,
                                const std::vector<int>& annotator_labels, double eta,
                                std::uint64_t seed);

NoiseResult inject_noise(const std::vector<int>& labels, int n_classes, const NoiseSpec& spec);

} // namespace rer
