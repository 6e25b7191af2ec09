#pragma once

#include <cstdint>
#include <vector>

#include "rer/config.hpp"
#include "rer/dataset.hpp"

namespace rer {

struct ScalingPoint {
    double n = 0.0;       // samples per class used to fit
    double chi_bar = 0.0; // evaluated on the full dataset
};

// chi_bar_n = (chi_inf * n^gamma0 + gamma1) / (n^gamma0 + gamma2), with
// gamma0 fixed at 1.808 unless overridden.
struct ScalingFit {
    double chi_inf = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double gamma0 = 1.808;
    double r_squared = 0.0;
    bool crosses_one = false; // fit is flagged, not refused, when the series crosses 1
    std::vector<ScalingPoint> points;

    double evaluate(double n) const;
};

// For each budget n: subsample n rows per class (seeded, without
// replacement; identity order when n equals the class size), train
// reconstructors, compute chi_bar across the entire dataset. Replicate
// results are averaged per budget.
std::vector<ScalingPoint> size_sweep(const FeatureDataset& dataset,
                                     const std::vector<int>& budgets,
                                     const AutoencoderConfig& config, int replicates = 1,
                                     unsigned threads = 0);

ScalingFit fit_scaling(const std::vector<ScalingPoint>& points, double gamma0 = 1.808);

// chi_inf - chi_bar: the difficulty contribution attributable to the finite
// dataset size. May be negative; returned as-is.
double finite_size_gap(double chi_bar_now, const ScalingFit& fit);

} // namespace rer
