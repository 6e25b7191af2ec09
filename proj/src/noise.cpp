#include "rer/noise.hpp"

#include <cmath>
#include <string>

#include "rer/errors.hpp"
#include "rer/rng.hpp"

namespace rer {

namespace {

void check_rate(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw ValidationError("noise rate " + std::to_string(eta) + " outside [0, 1]");
}

void check_labels(const std::vector<int>& labels, int n_classes) {
    if (labels.empty()) throw ValidationError("empty label vector");
    for (const int c : labels) {
        if (c < 0 || c >= n_classes)
            throw ValidationError("label " + std::to_string(c) + " outside [0, " +
                                  std::to_string(n_classes) + ")");
    }
}

} // namespace

NoiseResult inject_symmetric(const std::vector<int>& labels, int n_classes, double eta,
                             std::uint64_t seed) {
    check_rate(eta);
    check_labels(labels, n_classes);
    if (n_classes < 2) throw ValidationError("symmetric noise needs at least 2 classes");

    Rng rng = derive_stream(seed, "noise.symmetric");
    NoiseResult out;
    out.noisy_labels = labels;
    out.mistake_mask.assign(labels.size(), false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!rng.bernoulli(eta)) continue;
        // uniform over the n_classes - 1 other classes
        int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_classes - 1)));
        if (c >= labels[i]) ++c;
        out.noisy_labels[i] = c;
        out.mistake_mask[i] = true;
    }
    return out;
}

NoiseResult inject_asymmetric(const std::vector<int>& labels, int n_classes, double eta,
                              std::uint64_t seed) {
    check_rate(eta);
    check_labels(labels, n_classes);
    if (n_classes < 2) throw ValidationError("asymmetric noise needs at least 2 classes");

    Rng rng = derive_stream(seed, "noise.asymmetric");
    NoiseResult out;
    out.noisy_labels = labels;
    out.mistake_mask.assign(labels.size(), false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!rng.bernoulli(eta)) continue;
        out.noisy_labels[i] = (labels[i] + 1) % n_classes;
        out.mistake_mask[i] = true;
    }
    return out;
}

NoiseResult inject_confidence(const std::vector<int>& labels, const Matrix& predictions,
                              double eta, std::uint64_t seed) {
    check_rate(eta);
    const int n_classes = static_cast<int>(predictions.cols());
    check_labels(labels, n_classes);
    if (n_classes < 2) throw ValidationError("confidence noise needs at least 2 classes");
    if (predictions.rows() != labels.size())
        throw ValidationError("prediction rows " + std::to_string(predictions.rows()) +
                              " do not match " + std::to_string(labels.size()) + " labels");
    for (std::size_t i = 0; i < predictions.rows(); ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < predictions.cols(); ++j) row_sum += predictions(i, j);
        if (std::abs(row_sum - 1.0) > 1e-6)
            throw ValidationError("prediction row " + std::to_string(i) + " sums to " +
                                  std::to_string(row_sum) + ", expected 1");
    }

    Rng rng = derive_stream(seed, "noise.confidence");
    NoiseResult out;
    out.noisy_labels = labels;
    out.mistake_mask.assign(labels.size(), false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!rng.bernoulli(eta)) continue;
        int best = -1;
        double best_p = -1.0;
        for (int c = 0; c < n_classes; ++c) {
            if (c == labels[i]) continue;
            const double p = predictions(i, static_cast<std::size_t>(c));
            if (p > best_p) { // strict: ties keep the lowest class index
                best_p = p;
                best = c;
            }
        }
        out.noisy_labels[i] = best;
        out.mistake_mask[i] = true;
    }
    return out;
}

NoiseResult subsample_annotator(const std::vector<int>& clean,
                                const std::vector<int>& annotator_labels, double eta,
                                std::uint64_t seed) {
    check_rate(eta);
    if (annotator_labels.size() != clean.size())
        throw ValidationError("annotator label count does not match clean labels");

    std::vector<std::size_t> disagreement;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (annotator_labels[i] != clean[i]) disagreement.push_back(i);
    }
    const std::size_t wanted =
        static_cast<std::size_t>(std::llround(eta * static_cast<double>(clean.size())));
    if (wanted > disagreement.size())
        throw ValidationError("requested noise rate " + std::to_string(eta) + " needs " +
                              std::to_string(wanted) + " mistakes but the annotator set has only " +
                              std::to_string(disagreement.size()));

    Rng rng = derive_stream(seed, "noise.annotator");
    rng.shuffle(disagreement);

    NoiseResult out;
    out.noisy_labels = clean;
    out.mistake_mask.assign(clean.size(), false);
    for (std::size_t k = 0; k < wanted; ++k) {
        const std::size_t i = disagreement[k];
        out.noisy_labels[i] = annotator_labels[i];
        out.mistake_mask[i] = true;
    }
    return out;
}

NoiseResult inject_noise(const std::vector<int>& labels, int n_classes, const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::Symmetric:
            return inject_symmetric(labels, n_classes, spec.rate, spec.seed);
        case NoiseKind::Asymmetric:
            return inject_asymmetric(labels, n_classes, spec.rate, spec.seed);
        case NoiseKind::Confidence:
            if (!spec.predictions)
                throw ValidationError("confidence noise requires a prediction matrix");
            return inject_confidence(labels, *spec.predictions, spec.rate, spec.seed);
        case NoiseKind::Annotator:
            if (!spec.annotator_labels)
                throw ValidationError("annotator noise requires annotator labels");
            return subsample_annotator(labels, *spec.annotator_labels, spec.rate, spec.seed);
    }
    throw ValidationError("unknown noise kind");
}

} // namespace rer
