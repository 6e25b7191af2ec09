#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rer/rer_engine.hpp"

namespace rer {

struct ThresholdAnsatz {
    double gamma4 = 1.01;
    double gamma5 = 1.5;
    double gamma6 = 13.8;
};

// chi_hat_star = gamma4 * chi_0^(-gamma5 / (1 + gamma6 * eta)), with eta the
// raw noise estimate floored at 0.
double mistake_threshold(double chi_0, double eta_raw, const ThresholdAnsatz& ansatz = {});

// prediction = (chi >= threshold); ties at the threshold count as mislabeled.
std::vector<bool> predict_mistakes(const std::vector<double>& scores, double threshold);

// For each sample draw a class c' != labeled class and compute chi as if the
// sample were labeled c', all from the existing table. No retraining.
// flipped_out, when given, receives the drawn class per sample.
std::vector<double> emulate_mistake_scores(const ErrorTable& table, std::uint64_t seed,
                                           std::vector<int>* flipped_out = nullptr);

// Gaussian KDE with Silverman bandwidth and reflection about `boundary`
// (density mass beyond the boundary is folded back on-support).
class ReflectedKde {
public:
    ReflectedKde() = default;
    ReflectedKde(std::vector<double> samples, double boundary);
    double density(double x) const;
    double bandwidth() const { return bandwidth_; }

private:
    std::vector<double> sorted_;
    double bandwidth_ = 1.0;
    double boundary_ = 0.0;

    double base_density(double x) const;
};

// p(mistake | chi) = eta * p(chi | mistake) / p(chi), clamped to [0, 1]. Both
// densities reflect about max(observed + emulated).
struct MistakePosterior {
    ReflectedKde observed;
    ReflectedKde emulated;
    double eta = 0.0;
    bool degenerate = false; // eta <= 0: posterior is identically zero

    double evaluate(double chi) const;
};

MistakePosterior fit_mistake_posterior(const std::vector<double>& observed_chi,
                                       const std::vector<double>& emulated_chi, double eta_hat);

// w = (p - p*)/(1 - p*) above the threshold probability, (p* - p)/p* below.
std::vector<double> confidence_weights(const std::vector<double>& probabilities, double p_star);

struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auroc = 0.0;
    std::optional<double> f1_weighted;
    std::optional<double> ncfd; // null when F1 = 1
};

DetectionMetrics detection_metrics(const std::vector<double>& scores,
                                   const std::vector<bool>& predictions,
                                   const std::vector<bool>& mask,
                                   const std::vector<double>* weights = nullptr);

struct MistakeReport {
    std::vector<double> scores;
    std::vector<bool> predictions;
    double threshold_used = 0.0;
    std::vector<double> probabilities;   // empty when posterior is degenerate? no: zeros
    std::vector<double> weights;         // empty when p* is unusable
    double p_star = 0.0;
    bool posterior_degenerate = false;
    std::vector<std::size_t> ranked_indices; // by descending score
    std::optional<DetectionMetrics> metrics; // set when a ground-truth mask is given
};

MistakeReport detect_mistakes(const ErrorTable& table, std::uint64_t seed,
                              const std::vector<bool>* mask = nullptr,
                              const ThresholdAnsatz& ansatz = {});

} // namespace rer
