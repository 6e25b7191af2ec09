#include "rer/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "rer/errors.hpp"

namespace rer {

void AutoencoderConfig::validate() const {
    if (hidden_dims.empty()) throw ConfigError("hidden_dims must not be empty");
    for (const int h : hidden_dims)
        if (h < 1) throw ConfigError("hidden dimension must be positive");
    if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
    if (latent_dim >= hidden_dims.back())
        throw ConfigError("latent_dim must be smaller than the last hidden dimension");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(recon_loss_weight >= 0.0)) throw ConfigError("recon_loss_weight must be >= 0");
    if (!(l2_reg >= 0.0)) throw ConfigError("l2_reg must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (n_epochs < 1) throw ConfigError("n_epochs must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (n_neighbors < 2) throw ConfigError("n_neighbors must be >= 2");
    if (!(spread > 0.0)) throw ConfigError("spread must be positive");
    if (!(min_dist >= 0.0)) throw ConfigError("min_dist must be >= 0");
    if (negative_sample_rate < 0) throw ConfigError("negative_sample_rate must be >= 0");
    if (!(repulsion_strength >= 0.0)) throw ConfigError("repulsion_strength must be >= 0");
}

namespace {

const std::set<std::string> kKnownKeys = {
    "hidden_dims",     "latent_dim",        "recon_loss_weight", "batch_size",
    "l2_reg",          "dropout",           "n_epochs",          "learning_rate",
    "n_neighbors",     "spread",            "min_dist",          "negative_sample_rate",
    "repulsion_strength", "seed",
};

AutoencoderConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a json object");
    for (const auto& [key, value] : j.items()) {
        if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    AutoencoderConfig c;
    try {
        if (j.contains("hidden_dims")) c.hidden_dims = j["hidden_dims"].get<std::vector<int>>();
        if (j.contains("latent_dim")) c.latent_dim = j["latent_dim"].get<int>();
        if (j.contains("recon_loss_weight"))
            c.recon_loss_weight = j["recon_loss_weight"].get<double>();
        if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
        if (j.contains("l2_reg")) c.l2_reg = j["l2_reg"].get<double>();
        if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
        if (j.contains("n_epochs")) c.n_epochs = j["n_epochs"].get<int>();
        if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("n_neighbors")) c.n_neighbors = j["n_neighbors"].get<int>();
        if (j.contains("spread")) c.spread = j["spread"].get<double>();
        if (j.contains("min_dist")) c.min_dist = j["min_dist"].get<double>();
        if (j.contains("negative_sample_rate"))
            c.negative_sample_rate = j["negative_sample_rate"].get<int>();
        if (j.contains("repulsion_strength"))
            c.repulsion_strength = j["repulsion_strength"].get<double>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    }
    c.validate();
    return c;
}

} // namespace

AutoencoderConfig config_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config json: ") + e.what());
    }
    return from_json(j);
}

AutoencoderConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string config_to_json_text(const AutoencoderConfig& c) {
    nlohmann::json j;
    j["hidden_dims"] = c.hidden_dims;
    j["latent_dim"] = c.latent_dim;
    j["recon_loss_weight"] = c.recon_loss_weight;
    j["batch_size"] = c.batch_size;
    j["l2_reg"] = c.l2_reg;
    j["dropout"] = c.dropout;
    j["n_epochs"] = c.n_epochs;
    j["learning_rate"] = c.learning_rate;
    j["n_neighbors"] = c.n_neighbors;
    j["spread"] = c.spread;
    j["min_dist"] = c.min_dist;
    j["negative_sample_rate"] = c.negative_sample_rate;
    j["repulsion_strength"] = c.repulsion_strength;
    j["seed"] = c.seed;
    return j.dump(2);
}

} // namespace rer
