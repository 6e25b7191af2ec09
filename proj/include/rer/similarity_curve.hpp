#pragma once

#include <cstddef>

namespace rer {

// Low-dimensional similarity q(x) = 1 / (1 + a * x^(2b)), with (a, b) chosen
// by least squares against the target membership curve for a given spread and
// min_dist. Negative a or b can come out of the fit for min_dist close to
// spread; q is therefore clamped into [1e-12, 1 - 1e-12] wherever a log or a
// gradient is taken.
struct SimilarityCurve {
    double a = 1.0;
    double b = 1.0;
    double spread = 1.0;
    double min_dist = 0.1;

    double evaluate_raw(double x) const;
    double evaluate(double x) const; // clamped
};

// Target: psi(x) = 1 for x <= min_dist, exp(-(x - min_dist)/spread) otherwise.
double similarity_target(double x, double spread, double min_dist);

// Gauss-Newton with Levenberg damping from (a, b) = (1.58, 0.9) on 300 sample
// points over [0, 3*spread]; falls back to a coarse grid search over
// a in [-5, 5], b in [-3, 3] if the iteration diverges.
SimilarityCurve fit_similarity_curve(double spread, double min_dist);

} // namespace rer
