#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "rer/config.hpp"
#include "rer/fuzzy_graph.hpp"
#include "rer/matrix.hpp"
#include "rer/rng.hpp"
#include "rer/similarity_curve.hpp"

namespace rer {

enum class Activation { Relu, Linear, Sigmoid };

struct DenseLayer {
    Matrix w; // in x out, row-major
    std::vector<double> b;
    Activation act = Activation::Linear;
};

// One-class autoencoder: encoder d -> hidden -> latent (ReLU hidden, linear
// latent), decoder latent -> hidden -> d (ReLU hidden, sigmoid output). Maps
// [0,1]^d into (0,1)^d.
struct Network {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
    std::size_t input_dim = 0;
    std::size_t latent_dim = 0;
};

Network make_network(std::size_t input_dim, const AutoencoderConfig& config, Rng& init_rng);

// All parameter tensors in a fixed order (encoder then decoder; weights
// before biases per layer). Used by the optimizer and by gradient checks.
std::vector<std::pair<double*, std::size_t>> parameter_tensors(Network& net);

struct TrainingDiagnostics {
    double final_loss = 0.0;
    int epochs_run = 0;
    bool early_stopped = false;
    bool lowered_n_neighbors = false;
    bool used_fallback_curve = false;
    double curve_a = 0.0;
    double curve_b = 0.0;
};

struct Reconstructor {
    Network net;
    int class_id = 0;
    TrainingDiagnostics diagnostics;
};

// A sampled minibatch: attraction pairs are included graph edges, repulsion
// pairs are (head, uniformly drawn non-self vertex).
struct Minibatch {
    std::vector<std::pair<int, int>> edges;
    std::vector<std::pair<int, int>> negatives;
};

// Everything a loss evaluation consumes besides the parameters, frozen so the
// same batch can be re-evaluated at perturbed parameters (finite-difference
// checks) or with gradients.
struct BatchPlan {
    std::vector<int> vertices;         // unique, first-appearance order
    std::vector<std::pair<int, int>> edge_pos; // positions into vertices
    std::vector<std::pair<int, int>> negative_pos;
    std::vector<int> endpoint_pos;     // positions that receive the recon loss
    std::vector<Matrix> encoder_dropout; // one mask per ReLU layer, empty = off
    std::vector<Matrix> decoder_dropout;
};

BatchPlan plan_batch(const Minibatch& batch, const AutoencoderConfig& config,
                     std::size_t n_vertices, bool training, Rng* dropout_rng);

struct NetworkGrads {
    std::vector<Matrix> encoder_w;
    std::vector<std::vector<double>> encoder_b;
    std::vector<Matrix> decoder_w;
    std::vector<std::vector<double>> decoder_b;
};

struct LossBreakdown {
    double total = 0.0;
    double umap = 0.0;
    double recon = 0.0;
    double l2 = 0.0;
};

// L = L_umap + recon_loss_weight * L_recon + l2_reg * ||W||^2, where L_umap
// averages -log q over the batch edges plus the repulsion terms of the
// negatives, and L_recon is the mean squared reconstruction error over the
// endpoint vertices.
LossBreakdown batch_loss(const Network& net, const Matrix& features, const BatchPlan& plan,
                         const AutoencoderConfig& config, const SimilarityCurve& curve,
                         NetworkGrads* grads);

struct EpochCallbackInfo {
    int epoch = 0;
    double epoch_loss = 0.0;
};
using EpochCallback = std::function<void(const EpochCallbackInfo&, const Network&)>;

Reconstructor train_class_reconstructor(const Matrix& class_features,
                                        const AutoencoderConfig& config,
                                        std::uint64_t train_seed, int class_id = 0,
                                        const EpochCallback& callback = nullptr);

// Inference-mode forward pass of a single sample.
std::vector<double> reconstruct(const Network& net, const double* x);

// Delta = ||r(x) - x||_2 in inference mode.
double reconstruction_error(const Network& net, const double* x);

// delta[j][c] = reconstruction_error(reconstructors[c], features row j).
Matrix error_table(const std::vector<Reconstructor>& reconstructors, const Matrix& features,
                   unsigned threads = 0);

// Deterministic full-data loss with dropout off and negatives drawn from the
// given seed; intended for convergence diagnostics.
LossBreakdown evaluate_full_loss(const Network& net, const Matrix& features,
                                 const FuzzyGraph& graph, const AutoencoderConfig& config,
                                 const SimilarityCurve& curve, std::uint64_t eval_seed);

} // namespace rer
