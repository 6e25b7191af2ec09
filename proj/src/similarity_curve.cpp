#include "rer/similarity_curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rer/errors.hpp"

namespace rer {

namespace {

constexpr double kQFloor = 1e-12;
constexpr double kQCeil = 1.0 - 1e-12;
constexpr int kSamples = 300;
constexpr int kMaxIterations = 500;

double raw_q(double x, double a, double b) {
    if (x <= 0.0) return 1.0;
    const double denom = 1.0 + a * std::pow(x, 2.0 * b);
    return 1.0 / denom;
}

struct FitState {
    double a, b, sse;
};

double sse_for(const std::vector<double>& xs, const std::vector<double>& ys, double a, double b) {
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double q = raw_q(xs[i], a, b);
        if (!std::isfinite(q)) return std::numeric_limits<double>::infinity();
        const double r = q - ys[i];
        sse += r * r;
    }
    return sse;
}

} // namespace

double SimilarityCurve::evaluate_raw(double x) const { return raw_q(x, a, b); }

double SimilarityCurve::evaluate(double x) const {
    const double q = raw_q(x, a, b);
    if (!std::isfinite(q)) return q > 0 ? kQCeil : kQFloor;
    return std::clamp(q, kQFloor, kQCeil);
}

double similarity_target(double x, double spread, double min_dist) {
    if (x <= min_dist) return 1.0;
    return std::exp(-(x - min_dist) / spread);
}

namespace {

// Gauss-Newton with Levenberg damping; accepted steps only, so the SSE path
// is monotone decreasing from the starting point.
FitState levenberg_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                       double a0, double b0) {
    FitState cur{a0, b0, sse_for(xs, ys, a0, b0)};
    if (!std::isfinite(cur.sse)) return cur;
    double lambda = 1e-3;

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, jtr0 = 0.0, jtr1 = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            if (x <= 0.0) continue; // q == 1 with zero gradient at the origin
            const double p = std::pow(x, 2.0 * cur.b);
            const double dlog = 2.0 * std::log(x);
            const double denom = 1.0 + cur.a * p;
            const double q = 1.0 / denom;
            const double r = q - ys[i];
            const double qq = q * q;
            const double ja = -p * qq;
            const double jb = -cur.a * p * dlog * qq;
            if (!std::isfinite(ja) || !std::isfinite(jb) || !std::isfinite(r)) continue;
            jtj00 += ja * ja;
            jtj01 += ja * jb;
            jtj11 += jb * jb;
            jtr0 += ja * r;
            jtr1 += jb * r;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 16; ++attempt) {
            const double m00 = jtj00 * (1.0 + lambda);
            const double m11 = jtj11 * (1.0 + lambda);
            const double det = m00 * m11 - jtj01 * jtj01;
            if (det == 0.0 || !std::isfinite(det)) break;
            const double da = (-jtr0 * m11 + jtr1 * jtj01) / det;
            const double db = (-jtr1 * m00 + jtr0 * jtj01) / det;
            const double nsse = sse_for(xs, ys, cur.a + da, cur.b + db);
            if (std::isfinite(nsse) && nsse < cur.sse) {
                cur = {cur.a + da, cur.b + db, nsse};
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!stepped) break;
        if (!std::isfinite(cur.a) || !std::isfinite(cur.b) || cur.sse < 1e-6) break;
    }
    return cur;
}

bool diverged_fit(const FitState& fit) {
    return !std::isfinite(fit.a) || !std::isfinite(fit.b) || !std::isfinite(fit.sse) ||
           std::abs(fit.a) > 1e3 || std::abs(fit.b) > 1e2;
}

} // namespace

SimilarityCurve fit_similarity_curve(double spread, double min_dist) {
    if (!(spread > 0.0))
        throw ValidationError("spread must be positive, got " + std::to_string(spread));

    std::vector<double> xs(kSamples), ys(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        xs[i] = 3.0 * spread * static_cast<double>(i) / (kSamples - 1);
        ys[i] = similarity_target(xs[i], spread, min_dist);
    }

    FitState best = levenberg_fit(xs, ys, 1.58, 0.9);

    if (diverged_fit(best)) {
        // Large spread/min_dist pairs can drive the iteration into a
        // degenerate step-shaped solution with huge |a|, |b|. Restart from a
        // coarse grid optimum; monotone descent from there cannot re-enter
        // that basin.
        FitState grid{1.0, 1.0, std::numeric_limits<double>::infinity()};
        for (int ia = 0; ia <= 100; ++ia) {
            const double a = -5.0 + 0.1 * ia;
            for (int ib = 0; ib <= 60; ++ib) {
                const double b = -3.0 + 0.1 * ib;
                const double s = sse_for(xs, ys, a, b);
                if (s < grid.sse) grid = {a, b, s};
            }
        }
        const FitState polished = levenberg_fit(xs, ys, grid.a, grid.b);
        best = diverged_fit(polished) || polished.sse > grid.sse ? grid : polished;
    }

    SimilarityCurve out;
    out.a = best.a;
    out.b = best.b;
    out.spread = spread;
    out.min_dist = min_dist;
    return out;
}

} // namespace rer
