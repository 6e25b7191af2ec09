#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rer {

// Reconstructor training hyperparameters. Defaults are the values the whole
// pipeline is calibrated around; change them only deliberately.
struct AutoencoderConfig {
    std::vector<int> hidden_dims = {256};
    int latent_dim = 10;
    double recon_loss_weight = 20.0;
    int batch_size = 64;
    double l2_reg = 1e-6;
    double dropout = 0.01;
    int n_epochs = 20;
    double learning_rate = 1e-3; // Adam step size for the network
    int n_neighbors = 40;
    double spread = 25.0;
    double min_dist = 24.0;
    int negative_sample_rate = 5;
    double repulsion_strength = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Strict JSON round-trip: unknown keys are an error, missing keys keep
// defaults.
AutoencoderConfig config_from_json_text(const std::string& text);
AutoencoderConfig config_from_json_file(const std::string& path);
std::string config_to_json_text(const AutoencoderConfig& config);

} // namespace rer
