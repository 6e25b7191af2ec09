#include "rer/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rer/errors.hpp"
#include "rer/rng.hpp"

namespace rer {

namespace {
constexpr double kEps = 1e-12;
}

double mistake_threshold(double chi_0, double eta_raw, const ThresholdAnsatz& ansatz) {
    if (!(chi_0 > 0.0)) throw ValidationError("chi_0 must be positive");
    const double eta = std::max(0.0, eta_raw);
    const double exponent = -ansatz.gamma5 / (1.0 + ansatz.gamma6 * eta);
    return ansatz.gamma4 * std::pow(chi_0, exponent);
}

std::vector<bool> predict_mistakes(const std::vector<double>& scores, double threshold) {
    std::vector<bool> out(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j) out[j] = scores[j] >= threshold;
    return out;
}

std::vector<double> emulate_mistake_scores(const ErrorTable& table, std::uint64_t seed,
                                           std::vector<int>* flipped_out) {
    if (table.n_classes() < 2)
        throw ValidationError("mistake emulation needs at least 2 classes");
    Rng rng = derive_stream(seed, "emulate");
    const std::size_t n_c = table.n_classes();
    std::vector<double> out(table.n_samples());
    if (flipped_out) flipped_out->resize(table.n_samples());
    for (std::size_t j = 0; j < table.n_samples(); ++j) {
        int flipped = static_cast<int>(rng.below(n_c - 1));
        if (flipped >= table.labels[j]) ++flipped;
        out[j] = chi_of_row(table.delta.row(j), n_c, flipped);
        if (flipped_out) (*flipped_out)[j] = flipped;
    }
    return out;
}

ReflectedKde::ReflectedKde(std::vector<double> samples, double boundary)
    : sorted_(std::move(samples)), boundary_(boundary) {
    if (sorted_.empty()) throw ValidationError("kde needs at least one sample");
    std::sort(sorted_.begin(), sorted_.end());

    const std::size_t n = sorted_.size();
    double mean = 0.0;
    for (const double v : sorted_) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double v : sorted_) var += (v - mean) * (v - mean);
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;

    const auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted_[lo] * (1.0 - frac) + sorted_[hi] * frac;
    };
    const double iqr = quantile(0.75) - quantile(0.25);

    // Silverman's rule of thumb on this population
    double spread_est = sd;
    if (iqr > 0.0) spread_est = sd > 0.0 ? std::min(sd, iqr / 1.34) : iqr / 1.34;
    if (spread_est <= 0.0) spread_est = 1e-6 * std::max(1.0, std::abs(mean));
    bandwidth_ = 0.9 * spread_est * std::pow(static_cast<double>(n), -0.2);
}

double ReflectedKde::base_density(double x) const {
    const double h = bandwidth_;
    const double window = 8.0 * h;
    const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), x - window);
    const auto hi = std::upper_bound(sorted_.begin(), sorted_.end(), x + window);
    double sum = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const double z = (x - *it) / h;
        sum += std::exp(-0.5 * z * z);
    }
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    return sum * inv_sqrt_2pi / (static_cast<double>(sorted_.size()) * h);
}

double ReflectedKde::density(double x) const {
    // mirroring samples about the boundary is the same as also evaluating the
    // base estimate at the mirrored point
    return base_density(x) + base_density(2.0 * boundary_ - x);
}

double MistakePosterior::evaluate(double chi) const {
    if (degenerate) return 0.0;
    const double p_chi = observed.density(chi);
    const double p_chi_mistake = emulated.density(chi);
    const double p = eta * p_chi_mistake / std::max(kEps, p_chi);
    return std::clamp(p, 0.0, 1.0);
}

MistakePosterior fit_mistake_posterior(const std::vector<double>& observed_chi,
                                       const std::vector<double>& emulated_chi,
                                       double eta_hat) {
    if (observed_chi.empty() || emulated_chi.empty())
        throw ValidationError("posterior needs non-empty score populations");
    MistakePosterior post;
    post.eta = std::clamp(eta_hat, 0.0, 1.0);
    if (!(eta_hat > 0.0)) {
        post.degenerate = true;
        return post;
    }
    double boundary = -std::numeric_limits<double>::infinity();
    for (const double v : observed_chi) boundary = std::max(boundary, v);
    for (const double v : emulated_chi) boundary = std::max(boundary, v);
    post.observed = ReflectedKde(observed_chi, boundary);
    post.emulated = ReflectedKde(emulated_chi, boundary);
    return post;
}

std::vector<double> confidence_weights(const std::vector<double>& probabilities, double p_star) {
    if (!(p_star > 0.0 && p_star < 1.0))
        throw ValidationError("confidence weights need 0 < p* < 1, got " +
                              std::to_string(p_star));
    std::vector<double> out(probabilities.size());
    for (std::size_t j = 0; j < probabilities.size(); ++j) {
        const double p = probabilities[j];
        out[j] = p > p_star ? (p - p_star) / (1.0 - p_star) : (p_star - p) / p_star;
    }
    return out;
}

namespace {

double auroc_midrank(const std::vector<double>& scores, const std::vector<bool>& mask) {
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (const bool b : mask)
        if (b) ++n_pos;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0; // 1-based
        for (std::size_t k = i; k <= j; ++k)
            if (mask[order[k]]) rank_sum_pos += mid_rank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

} // namespace

DetectionMetrics detection_metrics(const std::vector<double>& scores,
                                   const std::vector<bool>& predictions,
                                   const std::vector<bool>& mask,
                                   const std::vector<double>* weights) {
    if (predictions.size() != mask.size() || scores.size() != mask.size())
        throw ValidationError("scores, predictions and mask must have equal length");
    if (weights && weights->size() != mask.size())
        throw ValidationError("weights must match the sample count");

    double tp = 0, fp = 0, fn = 0;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (predictions[j] && mask[j]) ++tp;
        if (predictions[j] && !mask[j]) ++fp;
        if (!predictions[j] && mask[j]) ++fn;
    }

    DetectionMetrics m;
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1_denom = 2.0 * tp + fp + fn;
    m.f1 = f1_denom > 0.0 ? 2.0 * tp / f1_denom : 0.0;
    m.auroc = auroc_midrank(scores, mask);

    if (weights) {
        double s_tp = 0.0, s_fp = 0.0, s_fn = 0.0;
        for (std::size_t j = 0; j < mask.size(); ++j) {
            const double w = (*weights)[j];
            if (predictions[j] && mask[j]) s_tp += w;
            if (predictions[j] && !mask[j]) s_fp += w;
            if (!predictions[j] && mask[j]) s_fn += w;
        }
        const double denom = 2.0 * s_tp + s_fp + s_fn;
        m.f1_weighted = denom > 0.0 ? 2.0 * s_tp / denom : 0.0;
        if (m.f1 < 1.0) {
            m.ncfd = (*m.f1_weighted - m.f1) / (1.0 - m.f1);
        } // NCFD undefined at F1 = 1
    }
    return m;
}

MistakeReport detect_mistakes(const ErrorTable& table, std::uint64_t seed,
                              const std::vector<bool>* mask, const ThresholdAnsatz& ansatz) {
    MistakeReport report;
    report.scores = chi_scores(table);
    const double c0 = chi_0(table);
    const NoiseEstimate est = estimate_noise(table);
    report.threshold_used = mistake_threshold(c0, est.raw, ansatz);
    report.predictions = predict_mistakes(report.scores, report.threshold_used);

    const std::vector<double> emulated = emulate_mistake_scores(table, seed);
    const MistakePosterior posterior =
        fit_mistake_posterior(report.scores, emulated, est.eta_hat);
    report.posterior_degenerate = posterior.degenerate;
    report.probabilities.resize(report.scores.size());
    for (std::size_t j = 0; j < report.scores.size(); ++j)
        report.probabilities[j] = posterior.evaluate(report.scores[j]);

    // link the ansatz threshold to the probability scale
    report.p_star = posterior.evaluate(report.threshold_used);
    std::vector<double>* weights_for_metrics = nullptr;
    if (report.p_star > 0.0 && report.p_star < 1.0) {
        report.weights = confidence_weights(report.probabilities, report.p_star);
        weights_for_metrics = &report.weights;
    }

    report.ranked_indices.resize(report.scores.size());
    std::iota(report.ranked_indices.begin(), report.ranked_indices.end(), 0);
    std::stable_sort(report.ranked_indices.begin(), report.ranked_indices.end(),
                     [&](std::size_t a, std::size_t b) {
                         return report.scores[a] > report.scores[b];
                     });

    if (mask) {
        if (mask->size() != report.scores.size())
            throw ValidationError("mask length does not match sample count");
        report.metrics = detection_metrics(report.scores, report.predictions, *mask,
                                           weights_for_metrics);
    }
    return report;
}

} // namespace rer
