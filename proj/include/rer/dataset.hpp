#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rer/matrix.hpp"

namespace rer {

// Feature/label container. Labels are always dense 0..n_classes-1 internally;
// label_values remembers the original value for each dense id when the input
// labels were sparse.
struct FeatureDataset {
    Matrix features;                            // N x d
    std::vector<int> noisy_labels;              // length N, values in [0, n_classes)
    std::optional<std::vector<int>> clean_labels; // evaluation only
    std::vector<std::string> class_names;       // empty or length n_classes
    std::vector<long long> label_values;        // original label per dense id
    int n_classes = 0;

    std::size_t n_samples() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    void validate() const;
};

struct NormalizationParams {
    std::vector<double> min; // per dimension
    std::vector<double> max;
};

enum class FeatureFormat { Auto, Npy, Csv };

Matrix load_features(const std::string& path, FeatureFormat format = FeatureFormat::Auto);

struct LabelFile {
    std::vector<long long> raw;                // as read
    std::vector<int> dense;                    // remapped to 0..n_classes-1
    std::vector<long long> values;             // original value per dense id
    std::vector<std::string> class_names;      // from JSON input, optional
    int n_classes = 0;
};

// CSV (one integer per line) or JSON (plain array, or object with "labels"
// and optional "class_names").
LabelFile load_labels(const std::string& path);

// out[i][j] = (in[i][j] - min_j) / (max_j - min_j); constant columns map to 0.5.
std::pair<Matrix, NormalizationParams> min_max_normalize(const Matrix& features);
Matrix apply_normalization(const Matrix& features, const NormalizationParams& params);

FeatureDataset make_dataset(Matrix features, const LabelFile& labels,
                            std::optional<std::vector<int>> clean_labels = std::nullopt);

} // namespace rer
