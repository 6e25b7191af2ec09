#include "rer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "rer/csv.hpp"
#include "rer/errors.hpp"
#include "rer/npy.hpp"

namespace rer {

void FeatureDataset::validate() const {
    if (features.rows() < 1) throw ValidationError("dataset has no samples");
    if (features.cols() < 2) throw ValidationError("feature dimension must be >= 2");
    if (noisy_labels.size() != features.rows())
        throw ValidationError("label count " + std::to_string(noisy_labels.size()) +
                              " does not match sample count " + std::to_string(features.rows()));
    if (n_classes < 1) throw ValidationError("dataset has no classes");
    for (std::size_t i = 0; i < noisy_labels.size(); ++i) {
        if (noisy_labels[i] < 0 || noisy_labels[i] >= n_classes)
            throw ValidationError("label " + std::to_string(noisy_labels[i]) + " at sample " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(n_classes) + ")");
    }
    if (clean_labels && clean_labels->size() != features.rows())
        throw ValidationError("clean label count does not match sample count");
    if (!class_names.empty() && class_names.size() != static_cast<std::size_t>(n_classes))
        throw ValidationError("class name count does not match class count");
}

Matrix load_features(const std::string& path, FeatureFormat format) {
    if (format == FeatureFormat::Auto) {
        const auto dot = path.rfind('.');
        const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
        format = ext == "npy" ? FeatureFormat::Npy : FeatureFormat::Csv;
    }
    Matrix m = format == FeatureFormat::Npy ? load_npy(path) : load_csv_matrix(path);
    if (m.rows() < 1) throw ValidationError(path + ": feature matrix has no rows");
    return m;
}

namespace {

LabelFile densify(std::vector<long long> raw, std::vector<std::string> names) {
    if (raw.empty()) throw ValidationError("label file contains no labels");
    std::map<long long, int> remap;
    for (const long long v : raw) remap.emplace(v, 0);
    int next = 0;
    for (auto& [value, dense] : remap) dense = next++;

    LabelFile out;
    out.raw = std::move(raw);
    out.n_classes = next;
    out.values.reserve(remap.size());
    for (const auto& [value, dense] : remap) out.values.push_back(value);
    out.dense.reserve(out.raw.size());
    for (const long long v : out.raw) out.dense.push_back(remap.at(v));
    if (!names.empty() && names.size() != static_cast<std::size_t>(out.n_classes))
        throw ValidationError("class_names length " + std::to_string(names.size()) +
                              " does not match " + std::to_string(out.n_classes) + " classes");
    out.class_names = std::move(names);
    return out;
}

LabelFile load_labels_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": invalid json: " + e.what());
    }

    std::vector<long long> raw;
    std::vector<std::string> names;
    const nlohmann::json* arr = nullptr;
    if (j.is_array()) {
        arr = &j;
    } else if (j.is_object() && j.contains("labels")) {
        arr = &j["labels"];
        if (j.contains("class_names")) {
            for (const auto& n : j["class_names"]) names.push_back(n.get<std::string>());
        }
    } else {
        throw FormatError(path + ": expected a json array or an object with a 'labels' key");
    }
    for (const auto& v : *arr) {
        if (!v.is_number_integer())
            throw FormatError(path + ": labels must be integers");
        raw.push_back(v.get<long long>());
    }
    return densify(std::move(raw), std::move(names));
}

} // namespace

LabelFile load_labels(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "json") return load_labels_json(path);
    return densify(load_csv_ints(path), {});
}

std::pair<Matrix, NormalizationParams> min_max_normalize(const Matrix& features) {
    const std::size_t n = features.rows(), d = features.cols();
    NormalizationParams params;
    params.min.assign(d, 0.0);
    params.max.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double lo = features(0, j), hi = features(0, j);
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, features(i, j));
            hi = std::max(hi, features(i, j));
        }
        params.min[j] = lo;
        params.max[j] = hi;
    }
    return {apply_normalization(features, params), std::move(params)};
}

Matrix apply_normalization(const Matrix& features, const NormalizationParams& params) {
    const std::size_t n = features.rows(), d = features.cols();
    if (params.min.size() != d)
        throw ValidationError("normalization params are for dimension " +
                              std::to_string(params.min.size()) + ", features have " +
                              std::to_string(d));
    Matrix out(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        const double lo = params.min[j];
        const double range = params.max[j] - lo;
        if (range == 0.0) {
            for (std::size_t i = 0; i < n; ++i) out(i, j) = 0.5;
        } else {
            const double inv = 1.0 / range;
            for (std::size_t i = 0; i < n; ++i) out(i, j) = (features(i, j) - lo) * inv;
        }
    }
    return out;
}

FeatureDataset make_dataset(Matrix features, const LabelFile& labels,
                            std::optional<std::vector<int>> clean_labels) {
    FeatureDataset ds;
    ds.features = std::move(features);
    ds.noisy_labels = labels.dense;
    ds.clean_labels = std::move(clean_labels);
    ds.class_names = labels.class_names;
    ds.label_values = labels.values;
    ds.n_classes = labels.n_classes;
    ds.validate();
    return ds;
}

} // namespace rer
