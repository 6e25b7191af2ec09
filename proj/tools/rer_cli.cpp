// rer: dataset difficulty and mislabel analysis from precomputed features.
//
// Subcommands: synth, inject-noise, fit, score, difficulty, scaling-curve,
// detect, report. Machine-readable JSON goes to --out or stdout; human
// summaries go to stderr; failures exit nonzero with a structured error JSON
// on stdout.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rer/analytics.hpp"
#include "rer/csv.hpp"
#include "rer/dataset.hpp"
#include "rer/detector.hpp"
#include "rer/errors.hpp"
#include "rer/model_bundle.hpp"
#include "rer/noise.hpp"
#include "rer/npy.hpp"
#include "rer/parallel.hpp"
#include "rer/pipeline.hpp"
#include "rer/rer_engine.hpp"
#include "rer/scaling.hpp"
#include "rer/synth.hpp"

using nlohmann::json;

namespace {

struct CommonOpts {
    std::string features_path;
    std::string labels_path;
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

rer::AutoencoderConfig load_config(const CommonOpts& opts) {
    rer::AutoencoderConfig config;
    if (!opts.config_path.empty()) config = rer::config_from_json_file(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    return config;
}

void emit(const json& payload, const std::string& out_path) {
    const std::string text = payload.dump(2);
    if (out_path.empty()) {
        std::cout << text << std::endl;
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw rer::IoError(out_path + ": cannot open file for writing");
        out << text << '\n';
    }
}

json config_json(const rer::AutoencoderConfig& config) {
    return json::parse(rer::config_to_json_text(config));
}

json report_json(const rer::RerReport& report, const rer::AutoencoderConfig& config,
                 std::size_t n_samples, std::size_t n_classes) {
    json j;
    j["config"] = config_json(config);
    j["n_samples"] = n_samples;
    j["n_classes"] = n_classes;
    j["chi_bar"] = report.chi_bar;
    j["chi_0"] = report.chi_0;
    j["chi_rand"] = report.chi_rand;
    j["eta_hat"] = report.eta_hat;
    j["eta_hat_raw"] = report.eta_hat_raw;
    j["per_class_chi"] = report.per_class_chi;
    j["chi"] = report.chi;
    return j;
}

// Maps raw on-disk label values through the bundle's dense table.
std::vector<int> densify_against_bundle(const rer::LabelFile& labels,
                                        const rer::ModelBundle& bundle) {
    std::map<long long, int> to_dense;
    for (std::size_t c = 0; c < bundle.label_values.size(); ++c)
        to_dense[bundle.label_values[c]] = static_cast<int>(c);
    std::vector<int> dense;
    dense.reserve(labels.raw.size());
    for (const long long v : labels.raw) {
        const auto it = to_dense.find(v);
        if (it == to_dense.end())
            throw rer::ValidationError("label value " + std::to_string(v) +
                                       " does not appear in the model bundle");
        dense.push_back(it->second);
    }
    return dense;
}

int run_synth(const std::string& spec_path, const std::string& out_features,
              const std::string& out_labels, const std::string& out_clean) {
    const rer::SynthSpec spec =
        spec_path.empty() ? rer::SynthSpec{} : rer::synth_spec_from_json_file(spec_path);
    const rer::FeatureDataset ds = rer::generate_synth(spec);
    rer::save_npy(out_features, ds.features);
    std::vector<long long> labels(ds.noisy_labels.begin(), ds.noisy_labels.end());
    rer::save_csv_ints(out_labels, labels);
    if (!out_clean.empty()) {
        std::vector<long long> clean(ds.clean_labels->begin(), ds.clean_labels->end());
        rer::save_csv_ints(out_clean, clean);
    }
    std::cerr << "synth: wrote " << ds.n_samples() << " samples x " << ds.dim() << " dims, "
              << ds.n_classes << " classes\n";
    return 0;
}

int run_inject(const std::string& labels_path, const std::string& kind, double rate,
               std::uint64_t seed, int n_classes_flag, const std::string& predictions_path,
               const std::string& annotator_path, const std::string& out_labels,
               const std::string& out_mask) {
    const rer::LabelFile labels = rer::load_labels(labels_path);
    const int n_classes = n_classes_flag > 0 ? n_classes_flag : labels.n_classes;

    rer::NoiseSpec spec;
    spec.rate = rate;
    spec.seed = seed;
    if (kind == "symmetric") {
        spec.kind = rer::NoiseKind::Symmetric;
    } else if (kind == "asymmetric") {
        spec.kind = rer::NoiseKind::Asymmetric;
    } else if (kind == "confidence") {
        spec.kind = rer::NoiseKind::Confidence;
        if (predictions_path.empty())
            throw rer::ValidationError("confidence noise requires --predictions");
        spec.predictions = rer::load_npy(predictions_path);
    } else if (kind == "annotator") {
        spec.kind = rer::NoiseKind::Annotator;
        if (annotator_path.empty())
            throw rer::ValidationError("annotator noise requires --annotator");
        const rer::LabelFile annotator = rer::load_labels(annotator_path);
        std::vector<int> ann(annotator.raw.size());
        for (std::size_t i = 0; i < ann.size(); ++i) ann[i] = static_cast<int>(annotator.raw[i]);
        spec.annotator_labels = std::move(ann);
    } else {
        throw rer::ValidationError("unknown noise kind '" + kind + "'");
    }

    std::vector<int> dense_in(labels.raw.size());
    for (std::size_t i = 0; i < dense_in.size(); ++i)
        dense_in[i] = static_cast<int>(labels.raw[i]);
    const rer::NoiseResult result = rer::inject_noise(dense_in, n_classes, spec);

    std::vector<long long> noisy(result.noisy_labels.begin(), result.noisy_labels.end());
    rer::save_csv_ints(out_labels, noisy);
    rer::save_csv_mask(out_mask, result.mistake_mask);
    std::size_t flips = 0;
    for (const bool b : result.mistake_mask) flips += b;
    std::cerr << "inject-noise: " << flips << "/" << result.mistake_mask.size()
              << " labels corrupted\n";
    return 0;
}

rer::FeatureDataset load_dataset(const CommonOpts& opts) {
    rer::Matrix features = rer::load_features(opts.features_path);
    const rer::LabelFile labels = rer::load_labels(opts.labels_path);
    return rer::make_dataset(std::move(features), labels);
}

int run_fit(const CommonOpts& opts, const std::string& bundle_out) {
    const rer::AutoencoderConfig config = load_config(opts);
    const rer::FeatureDataset ds = load_dataset(opts);
    const auto t0 = std::chrono::steady_clock::now();
    rer::DifficultyResult result = rer::run_difficulty(ds, config, opts.threads);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rer::save_bundle(bundle_out, result.bundle);
    std::cerr << "fit: trained " << result.bundle.n_classes() << " reconstructors in " << secs
              << " s; bundle written to " << bundle_out << "\n";
    return 0;
}

int run_score(const CommonOpts& opts, const std::string& bundle_path) {
    const rer::ModelBundle bundle = rer::load_bundle(bundle_path);
    const rer::Matrix features = rer::load_features(opts.features_path);
    const rer::LabelFile labels = rer::load_labels(opts.labels_path);
    const std::vector<int> dense = densify_against_bundle(labels, bundle);
    const rer::ErrorTable table = rer::score_with_bundle(bundle, features, dense, opts.threads);
    const rer::RerReport report = rer::compute_report(table);
    emit(report_json(report, bundle.config, table.n_samples(), table.n_classes()),
         opts.out_path);
    std::cerr << "score: chi_bar=" << report.chi_bar << " eta_hat=" << report.eta_hat << "\n";
    return 0;
}

int run_difficulty_cmd(const CommonOpts& opts, const std::string& save_bundle_path) {
    const rer::AutoencoderConfig config = load_config(opts);
    const rer::FeatureDataset ds = load_dataset(opts);
    const auto t0 = std::chrono::steady_clock::now();
    rer::DifficultyResult result = rer::run_difficulty(ds, config, opts.threads);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!save_bundle_path.empty()) rer::save_bundle(save_bundle_path, result.bundle);
    emit(report_json(result.report, config, ds.n_samples(), result.table.n_classes()),
         opts.out_path);
    std::cerr << "difficulty: chi_bar=" << result.report.chi_bar
              << " chi_0=" << result.report.chi_0 << " chi_rand=" << result.report.chi_rand
              << " eta_hat=" << result.report.eta_hat << " (" << secs << " s)\n";
    return 0;
}

int run_scaling(const CommonOpts& opts, const std::string& budgets_csv, int replicates,
                double gamma0, const std::string& points_out) {
    const rer::AutoencoderConfig config = load_config(opts);
    const rer::FeatureDataset ds = load_dataset(opts);

    std::vector<int> budgets;
    std::string token;
    std::stringstream ss(budgets_csv);
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) budgets.push_back(std::stoi(token));
    }

    const auto points = rer::size_sweep(ds, budgets, config, replicates, opts.threads);
    const rer::ScalingFit fit = rer::fit_scaling(points, gamma0);

    json j;
    j["config"] = config_json(config);
    j["gamma0"] = fit.gamma0;
    j["chi_inf"] = fit.chi_inf;
    j["gamma1"] = fit.gamma1;
    j["gamma2"] = fit.gamma2;
    j["r_squared"] = fit.r_squared;
    j["crosses_one"] = fit.crosses_one;
    json pts = json::array();
    for (const auto& p : points) {
        json pj;
        pj["n"] = p.n;
        pj["chi_bar"] = p.chi_bar;
        pj["fitted"] = fit.evaluate(p.n);
        pts.push_back(std::move(pj));
    }
    j["points"] = std::move(pts);
    emit(j, opts.out_path);

    if (!points_out.empty()) {
        rer::Matrix m(points.size(), 3);
        for (std::size_t i = 0; i < points.size(); ++i) {
            m(i, 0) = points[i].n;
            m(i, 1) = points[i].chi_bar;
            m(i, 2) = fit.evaluate(points[i].n);
        }
        rer::save_csv_matrix(points_out, m);
    }
    std::cerr << "scaling-curve: chi_inf=" << fit.chi_inf << " r_squared=" << fit.r_squared
              << (fit.crosses_one ? " (series crosses 1; fit is indicative only)" : "") << "\n";
    return 0;
}

int run_detect(const CommonOpts& opts, const std::string& bundle_path,
               const std::string& mask_path) {
    const rer::ModelBundle bundle = rer::load_bundle(bundle_path);
    const rer::Matrix features = rer::load_features(opts.features_path);
    const rer::LabelFile labels = rer::load_labels(opts.labels_path);
    const std::vector<int> dense = densify_against_bundle(labels, bundle);
    const rer::ErrorTable table = rer::score_with_bundle(bundle, features, dense, opts.threads);

    std::optional<std::vector<bool>> mask;
    if (!mask_path.empty()) mask = rer::load_csv_mask(mask_path);

    const std::uint64_t seed = opts.seed.value_or(bundle.config.seed);
    const rer::MistakeReport report = rer::detect_mistakes(table, seed, mask ? &*mask : nullptr);

    json j;
    j["config"] = config_json(bundle.config);
    j["seed"] = seed;
    j["threshold"] = report.threshold_used;
    j["p_star"] = report.p_star;
    j["posterior_degenerate"] = report.posterior_degenerate;
    j["scores"] = report.scores;
    j["predictions"] = report.predictions;
    j["probabilities"] = report.probabilities;
    if (!report.weights.empty()) j["weights"] = report.weights;
    j["ranked_indices"] = report.ranked_indices;
    if (report.metrics) {
        json m;
        m["precision"] = report.metrics->precision;
        m["recall"] = report.metrics->recall;
        m["f1"] = report.metrics->f1;
        if (std::isfinite(report.metrics->auroc)) m["auroc"] = report.metrics->auroc;
        if (report.metrics->f1_weighted) m["f1_weighted"] = *report.metrics->f1_weighted;
        if (report.metrics->ncfd)
            m["ncfd"] = *report.metrics->ncfd;
        else if (report.metrics->f1_weighted)
            m["ncfd"] = nullptr; // undefined at F1 = 1
        j["metrics"] = std::move(m);
    }
    emit(j, opts.out_path);

    std::size_t flagged = 0;
    for (const bool b : report.predictions) flagged += b;
    std::cerr << "detect: flagged " << flagged << "/" << report.predictions.size()
              << " samples at threshold " << report.threshold_used << "\n";
    return 0;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw rer::IoError(path + ": cannot open file");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw rer::FormatError(path + ": invalid json: " + e.what());
    }
}

int run_report_compare(const std::string& path_a, const std::string& path_b,
                       const std::string& out_path) {
    const json a = load_json_file(path_a);
    const json b = load_json_file(path_b);
    const std::vector<double> chi_a = a.at("chi").get<std::vector<double>>();
    const std::vector<double> chi_b = b.at("chi").get<std::vector<double>>();
    const std::vector<double> class_a = a.at("per_class_chi").get<std::vector<double>>();
    const std::vector<double> class_b = b.at("per_class_chi").get<std::vector<double>>();
    if (chi_a.size() != chi_b.size())
        throw rer::ValidationError("reports cover different sample counts");

    json j;
    j["sample"]["spearman"] = rer::spearman(chi_a, chi_b);
    j["sample"]["ndcg"] = rer::ndcg(chi_a, chi_b);
    j["class"]["spearman"] = rer::spearman(class_a, class_b);
    j["class"]["ndcg"] = rer::ndcg(class_a, class_b);
    emit(j, out_path);
    std::cerr << "report: sample spearman=" << j["sample"]["spearman"].get<double>()
              << " ndcg=" << j["sample"]["ndcg"].get<double>() << "\n";
    return 0;
}

int run_report_difficulty(const std::vector<std::string>& report_paths,
                          const std::string& external_path, const std::string& out_path) {
    const rer::Matrix acc = rer::load_csv_matrix(external_path);
    std::vector<double> accuracies;
    for (std::size_t i = 0; i < acc.rows(); ++i)
        accuracies.push_back(acc(i, acc.cols() - 1)); // last column holds the accuracy
    for (const double a : accuracies) {
        if (!(a > 0.0 && a < 1.0))
            throw rer::ValidationError("accuracies must lie strictly inside (0, 1)");
    }

    std::vector<double> chi_values;
    std::string level;
    if (report_paths.size() == 1) {
        const json r = load_json_file(report_paths[0]);
        const auto per_class = r.at("per_class_chi").get<std::vector<double>>();
        if (accuracies.size() == per_class.size()) {
            chi_values = per_class; // class-level scatter
            level = "class";
        } else if (accuracies.size() == 1) {
            chi_values = {r.at("chi_bar").get<double>()};
            level = "dataset";
        } else {
            throw rer::ValidationError("external accuracy count matches neither the class count "
                                       "nor the report count");
        }
    } else {
        for (const auto& path : report_paths)
            chi_values.push_back(load_json_file(path).at("chi_bar").get<double>());
        level = "dataset";
        if (accuracies.size() != chi_values.size())
            throw rer::ValidationError("need one accuracy per report");
    }

    std::vector<double> log_error;
    for (const double a : accuracies) log_error.push_back(std::log(1.0 - a));

    json j;
    j["level"] = level;
    json scatter = json::array();
    for (std::size_t i = 0; i < chi_values.size(); ++i) {
        json row;
        row["chi"] = chi_values[i];
        row["accuracy"] = accuracies[i];
        row["log_error_rate"] = log_error[i];
        scatter.push_back(std::move(row));
    }
    j["scatter"] = std::move(scatter);
    if (chi_values.size() >= 2) j["pearson"] = rer::pearson(chi_values, log_error);
    emit(j, out_path);
    return 0;
}

int error_exit_code(const std::exception& e) {
    if (dynamic_cast<const rer::IoError*>(&e)) return 3;
    if (dynamic_cast<const rer::FormatError*>(&e)) return 4;
    if (dynamic_cast<const rer::ValidationError*>(&e)) return 5;
    if (dynamic_cast<const rer::ConfigError*>(&e)) return 6;
    if (dynamic_cast<const rer::TrainingError*>(&e)) return 7;
    return 1;
}

const char* error_type_name(int code) {
    switch (code) {
        case 3: return "io";
        case 4: return "format";
        case 5: return "validation";
        case 6: return "config";
        case 7: return "training";
        default: return "internal";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reconstruction-error-ratio dataset analysis"};
    app.require_subcommand(1);

    CommonOpts opts;

    // synth
    std::string spec_path, out_features, out_labels, out_clean;
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled feature dataset");
    synth->add_option("--spec", spec_path, "synth spec json");
    synth->add_option("--out-features", out_features, "output features (.npy)")->required();
    synth->add_option("--out-labels", out_labels, "output labels (.csv)")->required();
    synth->add_option("--out-clean", out_clean, "optional copy of the clean labels (.csv)");

    // inject-noise
    std::string noise_labels, noise_kind = "symmetric", noise_pred, noise_ann, noise_out,
                              noise_mask_out;
    double noise_rate = 0.0;
    std::uint64_t noise_seed = 0;
    int noise_classes = 0;
    auto* inject = app.add_subcommand("inject-noise", "corrupt labels with controlled noise");
    inject->add_option("--labels", noise_labels, "input labels csv/json")->required();
    inject->add_option("--kind", noise_kind, "symmetric|asymmetric|confidence|annotator");
    inject->add_option("--rate", noise_rate, "noise rate in [0,1]")->required();
    inject->add_option("--seed", noise_seed, "rng seed");
    inject->add_option("--n-classes", noise_classes, "class count (default: inferred)");
    inject->add_option("--predictions", noise_pred, "classifier probabilities (.npy)");
    inject->add_option("--annotator", noise_ann, "annotator labels (.csv)");
    inject->add_option("--out-labels", noise_out, "output noisy labels")->required();
    inject->add_option("--out-mask", noise_mask_out, "output mistake mask")->required();

    const auto add_common = [&](CLI::App* cmd, bool with_config) {
        cmd->add_option("--features", opts.features_path, "feature matrix (.npy or .csv)")
            ->required();
        cmd->add_option("--labels", opts.labels_path, "labels (.csv or .json)")->required();
        if (with_config) cmd->add_option("--config", opts.config_path, "config json");
        cmd->add_option("--seed", opts.seed, "root seed (overrides config)");
        cmd->add_option("--threads", opts.threads, "worker count (default: cores)");
        cmd->add_option("--out", opts.out_path, "output json path (default: stdout)");
    };

    // fit
    std::string bundle_out;
    auto* fit = app.add_subcommand("fit", "train one reconstructor per class");
    fit->add_option("--features", opts.features_path, "feature matrix (.npy or .csv)")
        ->required();
    fit->add_option("--labels", opts.labels_path, "labels (.csv or .json)")->required();
    fit->add_option("--config", opts.config_path, "config json");
    fit->add_option("--seed", opts.seed, "root seed (overrides config)");
    fit->add_option("--threads", opts.threads, "worker count (default: cores)");
    fit->add_option("--out,--out-bundle", bundle_out, "model bundle output path")->required();

    // score
    std::string bundle_path;
    auto* score = app.add_subcommand("score", "compute ratio report from a trained bundle");
    add_common(score, false);
    score->add_option("--bundle", bundle_path, "model bundle")->required();

    // difficulty
    std::string save_bundle_path;
    auto* difficulty =
        app.add_subcommand("difficulty", "fit + score + noise estimate in one pass");
    add_common(difficulty, true);
    difficulty->add_option("--save-bundle", save_bundle_path, "also write the trained bundle");

    // scaling-curve
    std::string budgets_csv, points_out;
    int replicates = 1;
    double gamma0 = 1.808;
    auto* scaling =
        app.add_subcommand("scaling-curve", "sweep per-class budgets and fit the finite-size law");
    add_common(scaling, true);
    scaling->add_option("--budgets", budgets_csv, "comma-separated samples-per-class budgets")
        ->required();
    scaling->add_option("--replicates", replicates, "subsample replicates per budget");
    scaling->add_option("--gamma0", gamma0, "fixed scaling exponent");
    scaling->add_option("--out-points", points_out, "plot-data csv (n, chi_bar, fitted)");

    // detect
    std::string detect_bundle, mask_path;
    auto* detect = app.add_subcommand("detect", "rank and flag likely label mistakes");
    add_common(detect, false);
    detect->add_option("--bundle", detect_bundle, "model bundle")->required();
    detect->add_option("--mask", mask_path, "ground-truth mistake mask csv (enables metrics)");

    // report
    std::vector<std::string> compare_paths, difficulty_paths;
    std::string external_path, report_out;
    auto* report = app.add_subcommand("report", "alignment and correlation reports");
    report->add_option("--compare", compare_paths, "two score reports to align")->expected(2);
    report->add_option("--difficulty", difficulty_paths, "score report(s)");
    report->add_option("--external", external_path, "csv of accuracies");
    report->add_option("--out", report_out, "output json path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return run_synth(spec_path, out_features, out_labels, out_clean);
        if (inject->parsed())
            return run_inject(noise_labels, noise_kind, noise_rate, noise_seed, noise_classes,
                              noise_pred, noise_ann, noise_out, noise_mask_out);
        if (fit->parsed()) return run_fit(opts, bundle_out);
        if (score->parsed()) return run_score(opts, bundle_path);
        if (difficulty->parsed()) return run_difficulty_cmd(opts, save_bundle_path);
        if (scaling->parsed())
            return run_scaling(opts, budgets_csv, replicates, gamma0, points_out);
        if (detect->parsed()) return run_detect(opts, detect_bundle, mask_path);
        if (report->parsed()) {
            if (compare_paths.size() == 2)
                return run_report_compare(compare_paths[0], compare_paths[1], report_out);
            if (!difficulty_paths.empty() && !external_path.empty())
                return run_report_difficulty(difficulty_paths, external_path, report_out);
            throw rer::ValidationError(
                "report needs either --compare a.json b.json or --difficulty ... --external");
        }
    } catch (const std::exception& e) {
        const int code = error_exit_code(e);
        json err;
        err["error"]["type"] = error_type_name(code);
        err["error"]["message"] = e.what();
        std::cout << err.dump(2) << std::endl;
        std::cerr << "error: " << e.what() << "\n";
        return code;
    }
    return 0;
}
