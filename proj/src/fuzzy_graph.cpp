#include "rer/fuzzy_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "rer/errors.hpp"
#include "rer/parallel.hpp"

namespace rer {

KnnGraph knn_graph(const Matrix& points, std::size_t k, unsigned threads) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    if (k < 2 || n <= k)
        throw ValidationError("knn_graph needs n > k >= 2 (n = " + std::to_string(n) +
                              ", k = " + std::to_string(k) + "); lower k for small classes");

    KnnGraph g;
    g.n = n;
    g.k = k;
    g.indices.resize(n * k);
    g.dists.resize(n * k);

    parallel_for(n, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, int>> cand(n - 1);
        for (std::size_t i = begin; i < end; ++i) {
            const double* xi = points.row(i);
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                cand[c++] = {squared_distance(xi, points.row(j), d), static_cast<int>(j)};
            }
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                              cand.end());
            for (std::size_t j = 0; j < k; ++j) {
                g.indices[i * k + j] = cand[j].second;
                g.dists[i * k + j] = std::sqrt(cand[j].first);
            }
        }
    });
    return g;
}

SmoothKnn smooth_knn_calibration(const double* dists, std::size_t k) {
    SmoothKnn out;
    out.rho = dists[0];

    double mean_dist = 0.0;
    bool all_zero = true;
    bool any_decay = false;
    for (std::size_t j = 0; j < k; ++j) {
        mean_dist += dists[j];
        if (dists[j] != 0.0) all_zero = false;
        if (dists[j] > out.rho) any_decay = true;
    }
    mean_dist /= static_cast<double>(k);

    if (all_zero) {
        out.sigma = 1.0;
        return out;
    }
    const double sigma_cap = 1e3 * mean_dist;
    if (!any_decay) {
        // every distance equals rho: the sum is k for any sigma, no root exists
        out.sigma = sigma_cap;
        return out;
    }

    const double target = std::log2(static_cast<double>(k));
    const auto weight_sum = [&](double sigma) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            s += std::exp(-std::max(0.0, dists[j] - out.rho) / sigma);
        return s;
    };

    double lo = 0.0;
    double hi = std::numeric_limits<double>::max();
    double sigma = 1.0;
    for (int iter = 0; iter < 64; ++iter) {
        const double s = weight_sum(sigma);
        if (std::abs(s - target) <= 1e-5) break;
        if (s > target) {
            hi = sigma;
            sigma = 0.5 * (lo + hi);
        } else {
            lo = sigma;
            sigma = hi == std::numeric_limits<double>::max() ? sigma * 2.0 : 0.5 * (lo + hi);
        }
    }
    out.sigma = std::clamp(sigma, 1e-12, sigma_cap);
    return out;
}

FuzzyGraph build_fuzzy_graph(const Matrix& points, std::size_t n_neighbors, unsigned threads) {
    FuzzyGraph graph;
    graph.n_vertices = points.rows();
    graph.knn = knn_graph(points, n_neighbors, threads);
    const std::size_t n = graph.n_vertices;
    const std::size_t k = n_neighbors;

    // directed membership weights
    std::vector<double> weights(n * k);
    parallel_for(n, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const SmoothKnn cal = smooth_knn_calibration(&graph.knn.dists[i * k], k);
            for (std::size_t j = 0; j < k; ++j) {
                const double d = graph.knn.dists[i * k + j];
                weights[i * k + j] = std::exp(-std::max(0.0, d - cal.rho) / cal.sigma);
            }
        }
    });

    // fuzzy set union over ordered pairs
    std::map<std::pair<int, int>, double> pair_weight;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const int a = static_cast<int>(i);
            const int b = graph.knn.indices[i * k + j];
            const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
            auto [it, inserted] = pair_weight.emplace(key, weights[i * k + j]);
            if (!inserted) it->second = fuzzy_union(it->second, weights[i * k + j]);
        }
    }

    graph.edges.reserve(pair_weight.size() * 2);
    for (const auto& [key, w] : pair_weight) {
        if (w <= 0.0) continue;
        graph.edges.push_back({key.first, key.second, w});
        graph.edges.push_back({key.second, key.first, w});
    }
    return graph;
}

} // namespace rer
