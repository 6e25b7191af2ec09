#include "rer/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rer/errors.hpp"
#include "rer/pipeline.hpp"
#include "rer/rng.hpp"

namespace rer {

double ScalingFit::evaluate(double n) const {
    const double t = std::pow(n, gamma0);
    return (chi_inf * t + gamma1) / (t + gamma2);
}

std::vector<ScalingPoint> size_sweep(const FeatureDataset& dataset,
                                     const std::vector<int>& budgets,
                                     const AutoencoderConfig& config, int replicates,
                                     unsigned threads) {
    dataset.validate();
    if (budgets.empty()) throw ValidationError("size sweep needs at least one budget");
    if (replicates < 1) throw ValidationError("replicates must be >= 1");

    std::vector<std::vector<int>> class_rows(static_cast<std::size_t>(dataset.n_classes));
    for (std::size_t j = 0; j < dataset.noisy_labels.size(); ++j)
        class_rows[static_cast<std::size_t>(dataset.noisy_labels[j])].push_back(
            static_cast<int>(j));

    for (const int n : budgets) {
        if (n < 4) throw ValidationError("budget " + std::to_string(n) + " is too small");
        for (std::size_t c = 0; c < class_rows.size(); ++c) {
            if (static_cast<std::size_t>(n) > class_rows[c].size())
                throw ValidationError("budget " + std::to_string(n) + " exceeds class " +
                                      std::to_string(c) + " size " +
                                      std::to_string(class_rows[c].size()));
        }
    }

    auto [normalized, params] = min_max_normalize(dataset.features);

    std::vector<ScalingPoint> points;
    for (const int n : budgets) {
        double chi_sum = 0.0;
        for (int rep = 0; rep < replicates; ++rep) {
            std::vector<std::vector<int>> subsets(class_rows.size());
            for (std::size_t c = 0; c < class_rows.size(); ++c) {
                const auto& rows = class_rows[c];
                if (static_cast<std::size_t>(n) == rows.size()) {
                    subsets[c] = rows; // keep index order so the full-budget
                                       // sweep matches the plain pipeline
                    continue;
                }
                Rng rng = derive_stream(config.seed, "subsample",
                                        hash_combine(static_cast<std::uint64_t>(n),
                                                     static_cast<std::uint64_t>(rep)),
                                        c);
                std::vector<int> pool = rows;
                for (int i = 0; i < n; ++i) {
                    const std::size_t j =
                        static_cast<std::size_t>(i) +
                        static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(i)));
                    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
                }
                pool.resize(static_cast<std::size_t>(n));
                subsets[c] = std::move(pool);
            }

            const auto reconstructors =
                fit_reconstructors(normalized, dataset.noisy_labels, dataset.n_classes, config,
                                   threads, &subsets);
            ErrorTable table;
            table.delta = error_table(reconstructors, normalized, threads);
            table.labels = dataset.noisy_labels;
            chi_sum += chi_bar(table);
        }
        points.push_back({static_cast<double>(n), chi_sum / static_cast<double>(replicates)});
    }
    return points;
}

namespace {

// 3x3 solve by Gaussian elimination with partial pivoting
bool solve3(double a[3][3], double b[3], double x[3]) {
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[piv[r]][col]) > std::abs(a[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double p = a[piv[col]][col];
        if (p == 0.0 || !std::isfinite(p)) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[piv[r]][col] / p;
            for (int cc = col; cc < 3; ++cc) a[piv[r]][cc] -= f * a[piv[col]][cc];
            b[piv[r]] -= f * b[piv[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double s = b[piv[col]];
        for (int cc = col + 1; cc < 3; ++cc) s -= a[piv[col]][cc] * x[cc];
        x[col] = s / a[piv[col]][col];
    }
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

} // namespace

ScalingFit fit_scaling(const std::vector<ScalingPoint>& points, double gamma0) {
    if (points.size() < 4)
        throw ValidationError("scaling fit needs at least 4 points, got " +
                              std::to_string(points.size()));

    const std::size_t n = points.size();
    std::vector<double> t(n), y(n);
    double n_max = 0.0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(points[i].n > 0.0)) throw ValidationError("budgets must be positive");
        t[i] = std::pow(points[i].n, gamma0);
        y[i] = points[i].chi_bar;
        n_max = std::max(n_max, points[i].n);
        y_min = std::min(y_min, y[i]);
        y_max = std::max(y_max, y[i]);
    }

    double chi_inf = points.back().chi_bar;
    double g1 = std::pow(n_max, gamma0);
    double g2 = g1;

    const auto sse_at = [&](double ci, double a1, double a2) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (ci * t[i] + a1) / (t[i] + a2) - y[i];
            s += r * r;
        }
        return s;
    };

    double sse = sse_at(chi_inf, g1, g2);
    double lambda = 1e-3;
    bool converged = false;
    std::vector<double> trace;
    trace.push_back(sse);

    for (int iter = 0; iter < 1000; ++iter) {
        double jtj[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        double jtr[3] = {0, 0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const double denom = t[i] + g2;
            const double model = (chi_inf * t[i] + g1) / denom;
            const double r = model - y[i];
            const double j0 = t[i] / denom;
            const double j1 = 1.0 / denom;
            const double j2 = -model / denom;
            const double jac[3] = {j0, j1, j2};
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) jtj[a][b] += jac[a] * jac[b];
                jtr[a] += jac[a] * r;
            }
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 20; ++attempt) {
            double m[3][3];
            double rhs[3];
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) m[a][b] = jtj[a][b];
                m[a][a] *= 1.0 + lambda;
                rhs[a] = -jtr[a];
            }
            double delta[3];
            if (!solve3(m, rhs, delta)) {
                lambda *= 4.0;
                continue;
            }
            const double nc = chi_inf + delta[0];
            const double n1 = g1 + delta[1];
            const double n2 = g2 + delta[2];
            const double nsse = sse_at(nc, n1, n2);
            if (std::isfinite(nsse) && nsse <= sse) {
                const double gain = sse - nsse;
                chi_inf = nc;
                g1 = n1;
                g2 = n2;
                sse = nsse;
                trace.push_back(sse);
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (gain <= 1e-14 * std::max(sse, 1e-30) || sse < 1e-28) converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!stepped) {
            converged = true; // no descent direction left: local minimum
            break;
        }
        if (converged) break;
    }

    if (!converged) {
        std::string msg = "scaling fit did not converge after 1000 iterations; residual trace:";
        const std::size_t show = std::min<std::size_t>(trace.size(), 8);
        for (std::size_t i = trace.size() - show; i < trace.size(); ++i)
            msg += " " + std::to_string(trace[i]);
        throw TrainingError(msg);
    }

    ScalingFit fit;
    fit.chi_inf = chi_inf;
    fit.gamma1 = g1;
    fit.gamma2 = g2;
    fit.gamma0 = gamma0;
    fit.points = points;
    fit.crosses_one = y_min < 1.0 && y_max > 1.0;

    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(n);
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = (chi_inf * t[i] + g1) / (t[i] + g2);
        ss_res += (pred - y[i]) * (pred - y[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    fit.r_squared = ss_tot < 1e-30 ? (ss_res < 1e-20 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    return fit;
}

double finite_size_gap(double chi_bar_now, const ScalingFit& fit) {
    return fit.chi_inf - chi_bar_now;
}

} // namespace rer
