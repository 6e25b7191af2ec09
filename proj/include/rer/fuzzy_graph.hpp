#pragma once

#include <cstddef>
#include <vector>

#include "rer/matrix.hpp"

namespace rer {

struct KnnGraph {
    std::vector<int> indices; // n x k row-major
    std::vector<double> dists;
    std::size_t n = 0;
    std::size_t k = 0;

    int index(std::size_t i, std::size_t j) const { return indices[i * k + j]; }
    double dist(std::size_t i, std::size_t j) const { return dists[i * k + j]; }
};

// Exact brute-force k nearest neighbors, self excluded, distances ascending,
// ties broken by point index. Parallel over query rows.
KnnGraph knn_graph(const Matrix& points, std::size_t k, unsigned threads = 0);

// rho = distance to the nearest neighbor; sigma solves
//   sum_j exp(-max(0, d_j - rho) / sigma) = log2(k)
// by bisection (|sum - target| <= 1e-5, at most 64 iterations). Degenerate
// rows: all-zero distances give sigma = 1; rows with no decaying term clamp
// sigma at 1e3 * mean(d).
struct SmoothKnn {
    double rho = 0.0;
    double sigma = 1.0;
};
SmoothKnn smooth_knn_calibration(const double* dists, std::size_t k);

// w1 + w2 - w1*w2, arranged so a weight of exactly 1 stays exactly 1
inline double fuzzy_union(double w1, double w2) { return w1 + w2 * (1.0 - w1); }

struct FuzzyEdge {
    int from = 0;
    int to = 0;
    double weight = 0.0; // in (0, 1]
};

// Symmetrized membership graph: both directions of every surviving pair are
// stored with the fused weight.
struct FuzzyGraph {
    std::vector<FuzzyEdge> edges;
    std::size_t n_vertices = 0;
    KnnGraph knn;
};

FuzzyGraph build_fuzzy_graph(const Matrix& points, std::size_t n_neighbors,
                             unsigned threads = 0);

} // namespace rer
