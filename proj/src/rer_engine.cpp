#include "rer/rer_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rer/errors.hpp"

namespace rer {

namespace {
constexpr double kEps = 1e-12;
}

void ErrorTable::validate() const {
    if (labels.size() != delta.rows())
        throw ValidationError("error table has " + std::to_string(delta.rows()) +
                              " rows but " + std::to_string(labels.size()) + " labels");
    const int n_c = static_cast<int>(delta.cols());
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] < 0 || labels[j] >= n_c)
            throw ValidationError("label " + std::to_string(labels[j]) + " at sample " +
                                  std::to_string(j) + " outside [0, " + std::to_string(n_c) + ")");
    }
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double v = delta.data()[i];
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("error table entries must be finite and non-negative");
    }
}

double chi_of_row(const double* delta_row, std::size_t n_classes, int label) {
    double best_other = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (static_cast<int>(c) == label) continue;
        best_other = std::min(best_other, delta_row[c]);
    }
    return delta_row[label] / std::max(kEps, best_other);
}

namespace {

void require_ratio_table(const ErrorTable& table) {
    if (table.n_classes() < 2)
        throw ValidationError("ratio operations need at least 2 classes");
    table.validate();
}

double delta_rand_of_row(const double* row, std::size_t n_classes, int label) {
    double sum = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (static_cast<int>(c) != label) sum += row[c];
    }
    return sum / static_cast<double>(n_classes - 1);
}

} // namespace

std::vector<double> chi_scores(const ErrorTable& table) {
    require_ratio_table(table);
    std::vector<double> out(table.n_samples());
    for (std::size_t j = 0; j < table.n_samples(); ++j)
        out[j] = chi_of_row(table.delta.row(j), table.n_classes(), table.labels[j]);
    return out;
}

double chi_bar(const ErrorTable& table) {
    const auto chi = chi_scores(table);
    double sum = 0.0;
    for (const double v : chi) sum += v;
    return sum / static_cast<double>(chi.size());
}

double chi_0(const ErrorTable& table) {
    require_ratio_table(table);
    double sum = 0.0;
    for (std::size_t j = 0; j < table.n_samples(); ++j) {
        const double* row = table.delta.row(j);
        const double rand = delta_rand_of_row(row, table.n_classes(), table.labels[j]);
        sum += row[table.labels[j]] / std::max(kEps, rand);
    }
    return sum / static_cast<double>(table.n_samples());
}

double chi_rand(const ErrorTable& table) {
    require_ratio_table(table);
    double sum = 0.0;
    for (std::size_t j = 0; j < table.n_samples(); ++j) {
        const double* row = table.delta.row(j);
        double best = row[0];
        for (std::size_t c = 1; c < table.n_classes(); ++c) best = std::min(best, row[c]);
        const double rand = delta_rand_of_row(row, table.n_classes(), table.labels[j]);
        sum += best / std::max(kEps, rand);
    }
    return sum / static_cast<double>(table.n_samples());
}

NoiseEstimate estimate_noise(const ErrorTable& table) {
    const double c0 = chi_0(table);
    const double cr = chi_rand(table);
    if (cr >= 1.0 - 1e-9)
        throw ValidationError("degenerate error table: chi_rand = " + std::to_string(cr) +
                              " leaves the ratios uninformative");
    NoiseEstimate est;
    est.raw = (c0 - cr) / (1.0 - cr);
    est.eta_hat = std::clamp(est.raw, 0.0, 1.0);
    return est;
}

RerReport compute_report(const ErrorTable& table) {
    RerReport report;
    report.chi = chi_scores(table);
    double sum = 0.0;
    for (const double v : report.chi) sum += v;
    report.chi_bar = sum / static_cast<double>(report.chi.size());
    report.chi_0 = chi_0(table);
    report.chi_rand = chi_rand(table);
    const NoiseEstimate est = estimate_noise(table);
    report.eta_hat = est.eta_hat;
    report.eta_hat_raw = est.raw;

    report.per_class_chi.assign(table.n_classes(), 0.0);
    std::vector<std::size_t> counts(table.n_classes(), 0);
    for (std::size_t j = 0; j < table.n_samples(); ++j) {
        report.per_class_chi[static_cast<std::size_t>(table.labels[j])] += report.chi[j];
        ++counts[static_cast<std::size_t>(table.labels[j])];
    }
    for (std::size_t c = 0; c < table.n_classes(); ++c) {
        if (counts[c] > 0)
            report.per_class_chi[c] /= static_cast<double>(counts[c]);
    }
    return report;
}

} // namespace rer
