#include "rer/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rer/errors.hpp"

namespace rer {

GaussianFit fit_gaussian(const std::vector<double>& values) {
    if (values.size() < 2) throw ValidationError("gaussian fit needs at least 2 values");
    const std::size_t n = values.size();
    GaussianFit fit;
    for (const double v : values) fit.mean += v;
    fit.mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double v : values) var += (v - fit.mean) * (v - fit.mean);
    var /= static_cast<double>(n - 1);
    if (var <= 0.0) throw ValidationError("gaussian fit: zero variance");
    fit.std_dev = std::sqrt(var);

    constexpr int kBins = 100;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = (hi - lo) / kBins;

    std::vector<double> counts(kBins, 0.0);
    for (const double v : values) {
        int bin = static_cast<int>((v - lo) / width);
        bin = std::clamp(bin, 0, kBins - 1);
        counts[static_cast<std::size_t>(bin)] += 1.0;
    }

    // expected count per bin: N * binwidth * pdf(center)
    double ss_res = 0.0, ss_tot = 0.0;
    double count_mean = static_cast<double>(n) / kBins;
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (int b = 0; b < kBins; ++b) {
        const double center = lo + (b + 0.5) * width;
        const double z = (center - fit.mean) / fit.std_dev;
        const double expected = static_cast<double>(n) * width * inv_sqrt_2pi *
                                std::exp(-0.5 * z * z) / fit.std_dev;
        const double observed = counts[static_cast<std::size_t>(b)];
        ss_res += (observed - expected) * (observed - expected);
        ss_tot += (observed - count_mean) * (observed - count_mean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

std::vector<double> mid_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ValidationError("pearson needs two equal-length vectors of size >= 2");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0)
        throw ValidationError("pearson undefined for constant input");
    return sab / std::sqrt(saa * sbb);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(mid_ranks(a), mid_ranks(b));
}

namespace {

std::vector<double> min_max_scores(const std::vector<double>& v) {
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(v.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) * inv;
    return out;
}

} // namespace

double ndcg(const std::vector<double>& scores_a, const std::vector<double>& scores_b) {
    if (scores_a.size() != scores_b.size() || scores_a.empty())
        throw ValidationError("ndcg needs two equal-length non-empty score vectors");
    const std::size_t n = scores_a.size();
    const std::vector<double> a = min_max_scores(scores_a);
    const std::vector<double> rel = min_max_scores(scores_b);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a[x] > a[y]; });

    std::vector<double> ideal = rel;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    double dcg = 0.0, idcg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double discount = 1.0 / std::log2(static_cast<double>(i) + 2.0);
        dcg += rel[order[i]] * discount;
        idcg += ideal[i] * discount;
    }
    if (idcg <= 0.0) return 1.0; // all relevances equal: any ordering is ideal
    return dcg / idcg;
}

} // namespace rer
