#include "rer/model_bundle.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "rer/errors.hpp"

namespace rer {

namespace {

constexpr char kMagic[4] = {'R', 'E', 'R', 'B'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;

struct BlobWriter {
    std::vector<char> bytes;
    json directory = json::array();

    void add(const std::string& name, const double* data, std::size_t count) {
        json entry;
        entry["name"] = name;
        entry["offset"] = bytes.size();
        entry["count"] = count;
        directory.push_back(std::move(entry));
        const std::size_t old = bytes.size();
        bytes.resize(old + count * sizeof(double));
        std::memcpy(bytes.data() + old, data, count * sizeof(double));
    }
};

struct BlobReader {
    std::vector<char> bytes;
    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> directory;

    void read_into(const std::string& name, double* out, std::size_t count,
                   const std::string& path) const {
        const auto it = directory.find(name);
        if (it == directory.end())
            throw FormatError(path + ": bundle is missing blob '" + name + "'");
        if (it->second.second != count)
            throw FormatError(path + ": blob '" + name + "' has " +
                              std::to_string(it->second.second) + " values, expected " +
                              std::to_string(count));
        const std::size_t offset = it->second.first;
        if (offset + count * sizeof(double) > bytes.size())
            throw FormatError(path + ": truncated bundle (blob '" + name + "' out of range)");
        std::memcpy(out, bytes.data() + offset, count * sizeof(double));
    }
};

json layer_shapes(const std::vector<DenseLayer>& layers) {
    json arr = json::array();
    for (const auto& layer : layers) {
        json l;
        l["in"] = layer.w.rows();
        l["out"] = layer.w.cols();
        l["act"] = layer.act == Activation::Relu      ? "relu"
                   : layer.act == Activation::Sigmoid ? "sigmoid"
                                                      : "linear";
        arr.push_back(std::move(l));
    }
    return arr;
}

Activation parse_act(const std::string& s, const std::string& path) {
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "linear") return Activation::Linear;
    throw FormatError(path + ": unknown activation '" + s + "'");
}

} // namespace

void save_bundle(const std::string& path, const ModelBundle& bundle) {
    BlobWriter blobs;
    blobs.add("norm.min", bundle.normalization.min.data(), bundle.normalization.min.size());
    blobs.add("norm.max", bundle.normalization.max.data(), bundle.normalization.max.size());

    json classes = json::array();
    for (std::size_t c = 0; c < bundle.reconstructors.size(); ++c) {
        const Reconstructor& rec = bundle.reconstructors[c];
        const std::string prefix = "class" + std::to_string(c);
        for (std::size_t l = 0; l < rec.net.encoder.size(); ++l) {
            blobs.add(prefix + ".enc" + std::to_string(l) + ".w", rec.net.encoder[l].w.data(),
                      rec.net.encoder[l].w.size());
            blobs.add(prefix + ".enc" + std::to_string(l) + ".b", rec.net.encoder[l].b.data(),
                      rec.net.encoder[l].b.size());
        }
        for (std::size_t l = 0; l < rec.net.decoder.size(); ++l) {
            blobs.add(prefix + ".dec" + std::to_string(l) + ".w", rec.net.decoder[l].w.data(),
                      rec.net.decoder[l].w.size());
            blobs.add(prefix + ".dec" + std::to_string(l) + ".b", rec.net.decoder[l].b.data(),
                      rec.net.decoder[l].b.size());
        }

        json cls;
        cls["class_id"] = rec.class_id;
        cls["label_value"] =
            c < bundle.label_values.size() ? bundle.label_values[c] : static_cast<long long>(c);
        if (c < bundle.class_names.size()) cls["class_name"] = bundle.class_names[c];
        cls["input_dim"] = rec.net.input_dim;
        cls["latent_dim"] = rec.net.latent_dim;
        cls["encoder"] = layer_shapes(rec.net.encoder);
        cls["decoder"] = layer_shapes(rec.net.decoder);
        json diag;
        diag["final_loss"] = rec.diagnostics.final_loss;
        diag["epochs_run"] = rec.diagnostics.epochs_run;
        diag["early_stopped"] = rec.diagnostics.early_stopped;
        diag["lowered_n_neighbors"] = rec.diagnostics.lowered_n_neighbors;
        diag["used_fallback_curve"] = rec.diagnostics.used_fallback_curve;
        diag["curve_a"] = rec.diagnostics.curve_a;
        diag["curve_b"] = rec.diagnostics.curve_b;
        cls["diagnostics"] = std::move(diag);
        classes.push_back(std::move(cls));
    }

    json manifest;
    manifest["format_version"] = kVersion;
    manifest["config"] = json::parse(config_to_json_text(bundle.config));
    manifest["classes"] = std::move(classes);
    manifest["blobs"] = std::move(blobs.directory);
    manifest["blob_bytes"] = blobs.bytes.size();
    const std::string manifest_text = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open file for writing");
    out.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t manifest_len = manifest_text.size();
    out.write(reinterpret_cast<const char*>(&manifest_len), 8);
    out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
    out.write(blobs.bytes.data(), static_cast<std::streamsize>(blobs.bytes.size()));
    if (!out) throw IoError(path + ": write failed");
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": not a model bundle (bad magic)");

    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in) throw FormatError(path + ": truncated bundle header");
    if (version != kVersion)
        throw FormatError(path + ": unsupported bundle version " + std::to_string(version) +
                          " (reader supports " + std::to_string(kVersion) + ")");

    std::uint64_t manifest_len = 0;
    in.read(reinterpret_cast<char*>(&manifest_len), 8);
    if (!in) throw FormatError(path + ": truncated bundle header");

    std::string manifest_text(manifest_len, '\0');
    in.read(manifest_text.data(), static_cast<std::streamsize>(manifest_len));
    if (static_cast<std::uint64_t>(in.gcount()) != manifest_len)
        throw FormatError(path + ": truncated bundle manifest");

    json manifest;
    try {
        manifest = json::parse(manifest_text);
    } catch (const json::exception& e) {
        throw FormatError(path + ": invalid bundle manifest: " + e.what());
    }

    ModelBundle bundle;
    bundle.config = config_from_json_text(manifest.at("config").dump());

    BlobReader blobs;
    const std::uint64_t blob_bytes = manifest.at("blob_bytes").get<std::uint64_t>();
    blobs.bytes.resize(blob_bytes);
    in.read(blobs.bytes.data(), static_cast<std::streamsize>(blob_bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != blob_bytes)
        throw FormatError(path + ": truncated bundle (expected " + std::to_string(blob_bytes) +
                          " blob bytes)");
    for (const auto& entry : manifest.at("blobs")) {
        blobs.directory[entry.at("name").get<std::string>()] = {
            entry.at("offset").get<std::size_t>(), entry.at("count").get<std::size_t>()};
    }

    const auto norm_it = blobs.directory.find("norm.min");
    if (norm_it == blobs.directory.end()) throw FormatError(path + ": missing normalization");
    bundle.normalization.min.resize(norm_it->second.second);
    blobs.read_into("norm.min", bundle.normalization.min.data(),
                    bundle.normalization.min.size(), path);
    bundle.normalization.max.resize(bundle.normalization.min.size());
    blobs.read_into("norm.max", bundle.normalization.max.data(),
                    bundle.normalization.max.size(), path);

    for (std::size_t c = 0; c < manifest.at("classes").size(); ++c) {
        const json& cls = manifest["classes"][c];
        const std::string prefix = "class" + std::to_string(c);
        Reconstructor rec;
        rec.class_id = cls.at("class_id").get<int>();
        rec.net.input_dim = cls.at("input_dim").get<std::size_t>();
        rec.net.latent_dim = cls.at("latent_dim").get<std::size_t>();

        const auto load_layers = [&](const json& shapes, const std::string& tag) {
            std::vector<DenseLayer> layers;
            for (std::size_t l = 0; l < shapes.size(); ++l) {
                DenseLayer layer;
                const std::size_t rows = shapes[l].at("in").get<std::size_t>();
                const std::size_t cols = shapes[l].at("out").get<std::size_t>();
                layer.w = Matrix(rows, cols);
                layer.b.assign(cols, 0.0);
                layer.act = parse_act(shapes[l].at("act").get<std::string>(), path);
                const std::string base = prefix + "." + tag + std::to_string(l);
                blobs.read_into(base + ".w", layer.w.data(), layer.w.size(), path);
                blobs.read_into(base + ".b", layer.b.data(), layer.b.size(), path);
                layers.push_back(std::move(layer));
            }
            return layers;
        };
        rec.net.encoder = load_layers(cls.at("encoder"), "enc");
        rec.net.decoder = load_layers(cls.at("decoder"), "dec");

        const json& diag = cls.at("diagnostics");
        rec.diagnostics.final_loss = diag.at("final_loss").get<double>();
        rec.diagnostics.epochs_run = diag.at("epochs_run").get<int>();
        rec.diagnostics.early_stopped = diag.at("early_stopped").get<bool>();
        rec.diagnostics.lowered_n_neighbors = diag.at("lowered_n_neighbors").get<bool>();
        rec.diagnostics.used_fallback_curve = diag.at("used_fallback_curve").get<bool>();
        rec.diagnostics.curve_a = diag.at("curve_a").get<double>();
        rec.diagnostics.curve_b = diag.at("curve_b").get<double>();

        bundle.label_values.push_back(cls.at("label_value").get<long long>());
        if (cls.contains("class_name"))
            bundle.class_names.push_back(cls["class_name"].get<std::string>());
        bundle.reconstructors.push_back(std::move(rec));
    }
    return bundle;
}

} // namespace rer
