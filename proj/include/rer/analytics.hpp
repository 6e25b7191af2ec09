#pragma once

#include <vector>

namespace rer {

// Moments plus goodness of fit of a normal density against the 100-bin
// histogram of the values.
struct GaussianFit {
    double mean = 0.0;
    double std_dev = 0.0;
    double r_squared = 0.0;
};

GaussianFit fit_gaussian(const std::vector<double>& values);

// Mid-rank transform (average ranks for ties), 1-based.
std::vector<double> mid_ranks(const std::vector<double>& values);

// Pearson correlation of mid-ranked values.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Both score sets are min-max normalized; b provides relevance, a the
// ranking; log2 discount, normalized by the ideal ordering.
double ndcg(const std::vector<double>& scores_a, const std::vector<double>& scores_b);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

} // namespace rer
