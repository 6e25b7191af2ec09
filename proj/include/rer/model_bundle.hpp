#pragma once

#include <string>
#include <vector>

#include "rer/config.hpp"
#include "rer/dataset.hpp"
#include "rer/reconstructor.hpp"

namespace rer {

// Serialized unit: one trained reconstructor per class plus everything needed
// to score new samples with training-time normalization.
struct ModelBundle {
    AutoencoderConfig config;
    NormalizationParams normalization;
    std::vector<Reconstructor> reconstructors;
    std::vector<long long> label_values;   // original label per dense class id
    std::vector<std::string> class_names;  // optional

    std::size_t n_classes() const { return reconstructors.size(); }
};

// Single file: magic + version + JSON manifest + raw little-endian f64 blobs.
// Weight round-trips are bit exact.
void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

} // namespace rer
