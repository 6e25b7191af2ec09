#pragma once

#include <vector>

#include "rer/matrix.hpp"

namespace rer {

// Reconstruction errors for every (sample, class) pair plus the noisy labels;
// the substrate every ratio is computed from.
struct ErrorTable {
    Matrix delta; // N x n_classes, delta[j][c] >= 0
    std::vector<int> labels;

    std::size_t n_samples() const { return delta.rows(); }
    std::size_t n_classes() const { return delta.cols(); }

    void validate() const;
};

struct RerReport {
    std::vector<double> chi;        // per sample
    double chi_bar = 0.0;           // mean chi: average classification difficulty
    double chi_0 = 0.0;             // mean labeled-to-random error ratio
    double chi_rand = 0.0;          // mean best-to-random error ratio
    double eta_hat = 0.0;           // noise estimate clamped to [0, 1]
    double eta_hat_raw = 0.0;       // unclamped (chi_0 - chi_rand) / (1 - chi_rand)
    std::vector<double> per_class_chi;
};

// chi = Delta^c / max(eps, min_{c' != c} Delta^{c'}), the labeled-class error
// against the best other class.
double chi_of_row(const double* delta_row, std::size_t n_classes, int label);

std::vector<double> chi_scores(const ErrorTable& table);
double chi_bar(const ErrorTable& table);

// Delta_rand = mean of Delta over the classes other than the labeled one.
double chi_0(const ErrorTable& table);

// Delta_best = row minimum over all classes; chi_rand = E[Delta_best/Delta_rand].
double chi_rand(const ErrorTable& table);

struct NoiseEstimate {
    double eta_hat = 0.0; // clamped to [0, 1]
    double raw = 0.0;
};

// eta ~ (chi_0 - chi_rand) / (1 - chi_rand). Throws when chi_rand is within
// 1e-9 of 1 (the ratios carry no signal).
NoiseEstimate estimate_noise(const ErrorTable& table);

RerReport compute_report(const ErrorTable& table);

} // namespace rer
