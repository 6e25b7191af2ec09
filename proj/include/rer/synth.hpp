#pragma once

#include <cstdint>
#include <string>

#include "rer/dataset.hpp"

namespace rer {

enum class SynthManifold { GaussianBlob, LowRankGaussian };

// Labeled synthetic feature datasets with known structure; the test substrate
// for everything that needs a ground truth.
struct SynthSpec {
    int n_classes = 5;
    int samples_per_class = 200;
    int dim = 16;
    double cluster_std = 1.0;
    double separation = 8.0; // centroid sphere radius before normalization
    SynthManifold manifold = SynthManifold::GaussianBlob;
    std::uint64_t seed = 0;

    void validate() const;
};

SynthSpec synth_spec_from_json_text(const std::string& text);
SynthSpec synth_spec_from_json_file(const std::string& path);

// Centroids drawn on a sphere of radius `separation`; per-class samples from
// isotropic (or rank ceil(dim/4)) Gaussians; min-max normalized; labels are
// exactly balanced and recorded as clean.
FeatureDataset generate_synth(const SynthSpec& spec);

} // namespace rer
