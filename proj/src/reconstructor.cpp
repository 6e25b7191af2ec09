#include "rer/reconstructor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "rer/errors.hpp"
#include "rer/parallel.hpp"

namespace rer {

namespace {

constexpr double kQFloor = 1e-12;
constexpr double kQCeil = 1.0 - 1e-12;
// stop once the epoch loss improves by less than 1% twice in a row
constexpr double kEarlyStopTol = 1e-2;
constexpr int kEarlyStopPatience = 2;

void glorot_fill(Matrix& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (std::size_t i = 0; i < w.size(); ++i)
        w.data()[i] = (2.0 * rng.uniform01() - 1.0) * limit;
}

void apply_activation(Matrix& pre, Matrix& post, Activation act) {
    post.resize(pre.rows(), pre.cols());
    const std::size_t n = pre.size();
    switch (act) {
        case Activation::Relu:
            for (std::size_t i = 0; i < n; ++i) post.data()[i] = std::max(0.0, pre.data()[i]);
            break;
        case Activation::Linear:
            for (std::size_t i = 0; i < n; ++i) post.data()[i] = pre.data()[i];
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) post.data()[i] = 1.0 / (1.0 + std::exp(-pre.data()[i]));
            break;
    }
}

struct LayerCache {
    Matrix pre;
    Matrix post; // after activation and dropout; input to the next layer
};

// Forward through a layer stack. dropout_masks, when non-null, holds one
// mask (already scaled by 1/(1-p)) per ReLU layer, in layer order.
void forward_stack(const std::vector<DenseLayer>& layers, const Matrix& input,
                   std::vector<LayerCache>& caches, const std::vector<Matrix>* dropout_masks) {
    caches.resize(layers.size());
    const Matrix* cur = &input;
    std::size_t mask_idx = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        LayerCache& cache = caches[l];
        const std::size_t rows = cur->rows();
        const std::size_t out = layer.w.cols();
        cache.pre.resize(rows, out);
        gemm_nn(cur->data(), rows, layer.w.rows(), layer.w.data(), out, cache.pre.data());
        for (std::size_t i = 0; i < rows; ++i) {
            double* p = cache.pre.row(i);
            for (std::size_t j = 0; j < out; ++j) p[j] += layer.b[j];
        }
        apply_activation(cache.pre, cache.post, layer.act);
        if (layer.act == Activation::Relu && dropout_masks && mask_idx < dropout_masks->size() &&
            !(*dropout_masks)[mask_idx].empty()) {
            const Matrix& mask = (*dropout_masks)[mask_idx];
            for (std::size_t i = 0; i < cache.post.size(); ++i)
                cache.post.data()[i] *= mask.data()[i];
        }
        if (layer.act == Activation::Relu) ++mask_idx;
        cur = &cache.post;
    }
}

// Backward through a stack given d(loss)/d(post of last layer); d_out is
// consumed. Returns the gradient w.r.t. the stack input in d_input when
// requested.
void backward_stack(const std::vector<DenseLayer>& layers, const Matrix& input,
                    const std::vector<LayerCache>& caches,
                    const std::vector<Matrix>* dropout_masks, Matrix& d_out,
                    std::vector<Matrix>& grad_w, std::vector<std::vector<double>>& grad_b,
                    Matrix* d_input) {
    std::size_t n_relu = 0;
    for (const auto& layer : layers)
        if (layer.act == Activation::Relu) ++n_relu;

    thread_local Matrix d_prev;
    for (std::size_t li = layers.size(); li-- > 0;) {
        const DenseLayer& layer = layers[li];
        const LayerCache& cache = caches[li];
        const std::size_t rows = d_out.rows();
        const std::size_t out = layer.w.cols();

        // d_out currently holds dL/d(post after dropout)
        if (layer.act == Activation::Relu) {
            --n_relu;
            if (dropout_masks && n_relu < dropout_masks->size() &&
                !(*dropout_masks)[n_relu].empty()) {
                const Matrix& mask = (*dropout_masks)[n_relu];
                for (std::size_t i = 0; i < d_out.size(); ++i)
                    d_out.data()[i] *= mask.data()[i];
            }
            for (std::size_t i = 0; i < d_out.size(); ++i)
                if (cache.pre.data()[i] <= 0.0) d_out.data()[i] = 0.0;
        } else if (layer.act == Activation::Sigmoid) {
            for (std::size_t i = 0; i < d_out.size(); ++i) {
                const double s = cache.post.data()[i];
                d_out.data()[i] *= s * (1.0 - s);
            }
        }
        // d_out now holds dL/d(pre)

        const Matrix& layer_input = li == 0 ? input : caches[li - 1].post;
        gemm_tn_acc(layer_input.data(), rows, layer.w.rows(), d_out.data(), out,
                    grad_w[li].data());
        for (std::size_t i = 0; i < rows; ++i) {
            const double* p = d_out.row(i);
            for (std::size_t j = 0; j < out; ++j) grad_b[li][j] += p[j];
        }

        const bool need_input_grad = li > 0 || d_input != nullptr;
        if (need_input_grad) {
            d_prev.resize(rows, layer.w.rows());
            gemm_nt(d_out.data(), rows, out, layer.w.data(), layer.w.rows(), d_prev.data());
            if (li == 0) {
                std::swap(*d_input, d_prev);
            } else {
                std::swap(d_out, d_prev);
            }
        }
    }
}

struct PairTerm {
    double loss = 0.0;
    double dloss_ddist = 0.0;
};

// Both terms work in u = a * d^(2b), so q = 1/(1+u) never has to be formed
// near 1 where -log(1-q) would cancel catastrophically. The q clamp to
// [1e-12, 1-1e-12] translates to u outside [1e-12, 1e12] having zero
// gradient.
constexpr double kUFloor = 1e-12; // q >= ceil
constexpr double kUCeil = 1e12;   // q <= floor

double pair_u(double dist, const SimilarityCurve& curve) {
    if (dist <= 0.0) return 0.0;
    return curve.a * std::pow(dist, 2.0 * curve.b);
}

PairTerm attraction_term(double dist, const SimilarityCurve& curve) {
    PairTerm t;
    const double u = pair_u(dist, curve);
    if (!std::isfinite(u) || !(u > -1.0) || u >= kUCeil) {
        t.loss = -std::log(kQFloor); // q at or below the floor
        return t;
    }
    if (u <= kUFloor) {
        t.loss = -std::log(kQCeil);
        return t;
    }
    t.loss = std::log1p(u); // -log q
    t.dloss_ddist = 2.0 * curve.b * u / ((1.0 + u) * std::max(dist, 1e-300));
    return t;
}

PairTerm repulsion_term(double dist, const SimilarityCurve& curve) {
    PairTerm t;
    const double u = pair_u(dist, curve);
    if (!std::isfinite(u) || !(u > -1.0) || u >= kUCeil) {
        t.loss = -std::log(1.0 - kQFloor); // ~0; q pinned at the floor
        return t;
    }
    if (u <= kUFloor) {
        t.loss = -std::log(1.0 - kQCeil);
        return t;
    }
    t.loss = std::log1p(u) - std::log(u); // -log(1 - q)
    t.dloss_ddist = -2.0 * curve.b / ((1.0 + u) * std::max(dist, 1e-300));
    return t;
}

struct Adam {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
    long t = 0;
    std::vector<std::vector<double>> m, v;

    void init(const std::vector<std::pair<double*, std::size_t>>& tensors) {
        m.resize(tensors.size());
        v.resize(tensors.size());
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            m[i].assign(tensors[i].second, 0.0);
            v[i].assign(tensors[i].second, 0.0);
        }
    }

    void step(const std::vector<std::pair<double*, std::size_t>>& params,
              const std::vector<std::pair<const double*, std::size_t>>& grads) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t k = 0; k < params.size(); ++k) {
            double* w = params[k].first;
            const double* g = grads[k].first;
            double* mk = m[k].data();
            double* vk = v[k].data();
            for (std::size_t i = 0; i < params[k].second; ++i) {
                mk[i] = beta1 * mk[i] + (1.0 - beta1) * g[i];
                vk[i] = beta2 * vk[i] + (1.0 - beta2) * g[i] * g[i];
                w[i] -= lr * (mk[i] / c1) / (std::sqrt(vk[i] / c2) + eps);
            }
        }
    }
};

NetworkGrads make_grads(const Network& net) {
    NetworkGrads g;
    for (const auto& layer : net.encoder) {
        g.encoder_w.emplace_back(layer.w.rows(), layer.w.cols());
        g.encoder_b.emplace_back(layer.b.size(), 0.0);
    }
    for (const auto& layer : net.decoder) {
        g.decoder_w.emplace_back(layer.w.rows(), layer.w.cols());
        g.decoder_b.emplace_back(layer.b.size(), 0.0);
    }
    return g;
}

void zero_grads(NetworkGrads& g) {
    for (auto& w : g.encoder_w) w.fill(0.0);
    for (auto& b : g.encoder_b) std::fill(b.begin(), b.end(), 0.0);
    for (auto& w : g.decoder_w) w.fill(0.0);
    for (auto& b : g.decoder_b) std::fill(b.begin(), b.end(), 0.0);
}

std::vector<std::pair<const double*, std::size_t>> grad_tensors(const NetworkGrads& g) {
    std::vector<std::pair<const double*, std::size_t>> out;
    for (std::size_t l = 0; l < g.encoder_w.size(); ++l) {
        out.emplace_back(g.encoder_w[l].data(), g.encoder_w[l].size());
        out.emplace_back(g.encoder_b[l].data(), g.encoder_b[l].size());
    }
    for (std::size_t l = 0; l < g.decoder_w.size(); ++l) {
        out.emplace_back(g.decoder_w[l].data(), g.decoder_w[l].size());
        out.emplace_back(g.decoder_b[l].data(), g.decoder_b[l].size());
    }
    return out;
}

} // namespace

Network make_network(std::size_t input_dim, const AutoencoderConfig& config, Rng& init_rng) {
    config.validate();
    Network net;
    net.input_dim = input_dim;
    net.latent_dim = static_cast<std::size_t>(config.latent_dim);

    std::size_t in = input_dim;
    for (const int h : config.hidden_dims) {
        DenseLayer layer;
        layer.w = Matrix(in, static_cast<std::size_t>(h));
        layer.b.assign(static_cast<std::size_t>(h), 0.0);
        layer.act = Activation::Relu;
        net.encoder.push_back(std::move(layer));
        in = static_cast<std::size_t>(h);
    }
    {
        DenseLayer layer;
        layer.w = Matrix(in, net.latent_dim);
        layer.b.assign(net.latent_dim, 0.0);
        layer.act = Activation::Linear;
        net.encoder.push_back(std::move(layer));
    }

    in = net.latent_dim;
    for (auto it = config.hidden_dims.rbegin(); it != config.hidden_dims.rend(); ++it) {
        DenseLayer layer;
        layer.w = Matrix(in, static_cast<std::size_t>(*it));
        layer.b.assign(static_cast<std::size_t>(*it), 0.0);
        layer.act = Activation::Relu;
        net.decoder.push_back(std::move(layer));
        in = static_cast<std::size_t>(*it);
    }
    {
        DenseLayer layer;
        layer.w = Matrix(in, input_dim);
        layer.b.assign(input_dim, 0.0);
        layer.act = Activation::Sigmoid;
        net.decoder.push_back(std::move(layer));
    }

    for (auto& layer : net.encoder) glorot_fill(layer.w, init_rng);
    for (auto& layer : net.decoder) glorot_fill(layer.w, init_rng);
    return net;
}

std::vector<std::pair<double*, std::size_t>> parameter_tensors(Network& net) {
    std::vector<std::pair<double*, std::size_t>> out;
    for (auto& layer : net.encoder) {
        out.emplace_back(layer.w.data(), layer.w.size());
        out.emplace_back(layer.b.data(), layer.b.size());
    }
    for (auto& layer : net.decoder) {
        out.emplace_back(layer.w.data(), layer.w.size());
        out.emplace_back(layer.b.data(), layer.b.size());
    }
    return out;
}

namespace {

// Reuses the plan's buffers across steps.
void fill_plan(BatchPlan& plan, const Minibatch& batch, const AutoencoderConfig& config,
               bool training, Rng* dropout_rng) {
    plan.vertices.clear();
    plan.edge_pos.clear();
    plan.negative_pos.clear();
    plan.endpoint_pos.clear();

    thread_local std::unordered_map<int, int> position;
    position.clear();
    const auto intern = [&](int v) {
        auto [it, inserted] = position.emplace(v, static_cast<int>(plan.vertices.size()));
        if (inserted) plan.vertices.push_back(v);
        return it->second;
    };

    thread_local std::vector<bool> is_endpoint;
    is_endpoint.clear();
    for (const auto& [i, j] : batch.edges) {
        const int pi = intern(i);
        const int pj = intern(j);
        plan.edge_pos.emplace_back(pi, pj);
        if (static_cast<std::size_t>(std::max(pi, pj)) >= is_endpoint.size())
            is_endpoint.resize(plan.vertices.size(), false);
        is_endpoint[pi] = is_endpoint[pj] = true;
    }
    for (const auto& [i, k] : batch.negatives) {
        plan.negative_pos.emplace_back(intern(i), intern(k));
    }
    is_endpoint.resize(plan.vertices.size(), false);
    for (std::size_t p = 0; p < plan.vertices.size(); ++p)
        if (is_endpoint[p]) plan.endpoint_pos.push_back(static_cast<int>(p));

    if (training && config.dropout > 0.0 && dropout_rng) {
        const double keep = 1.0 - config.dropout;
        const double scale = 1.0 / keep;
        const std::size_t n_hidden = config.hidden_dims.size();
        plan.encoder_dropout.resize(n_hidden);
        plan.decoder_dropout.resize(n_hidden);
        const auto draw_mask = [&](Matrix& mask, std::size_t rows, std::size_t cols) {
            mask.resize(rows, cols);
            for (std::size_t i = 0; i < mask.size(); ++i)
                mask.data()[i] = dropout_rng->bernoulli(keep) ? scale : 0.0;
        };
        for (std::size_t l = 0; l < n_hidden; ++l)
            draw_mask(plan.encoder_dropout[l], plan.vertices.size(),
                      static_cast<std::size_t>(config.hidden_dims[l]));
        for (std::size_t l = 0; l < n_hidden; ++l)
            draw_mask(plan.decoder_dropout[l], plan.endpoint_pos.size(),
                      static_cast<std::size_t>(config.hidden_dims[n_hidden - 1 - l]));
    } else {
        plan.encoder_dropout.clear();
        plan.decoder_dropout.clear();
    }
}

} // namespace

BatchPlan plan_batch(const Minibatch& batch, const AutoencoderConfig& config,
                     std::size_t n_vertices, bool training, Rng* dropout_rng) {
    (void)n_vertices;
    BatchPlan plan;
    fill_plan(plan, batch, config, training, dropout_rng);
    return plan;
}

LossBreakdown batch_loss(const Network& net, const Matrix& features, const BatchPlan& plan,
                         const AutoencoderConfig& config, const SimilarityCurve& curve,
                         NetworkGrads* grads) {
    LossBreakdown out;
    const std::size_t u_count = plan.vertices.size();
    const std::size_t d = net.input_dim;
    const std::size_t latent = net.latent_dim;
    const std::size_t e_count = plan.endpoint_pos.size();

    // per-thread buffers survive across steps; resize keeps capacity
    thread_local std::vector<LayerCache> enc_caches, dec_caches;
    thread_local Matrix x_batch, z_sub, x_sub, d_z, d_recon;

    x_batch.resize(u_count, d);
    for (std::size_t p = 0; p < u_count; ++p) {
        const double* src = features.row(static_cast<std::size_t>(plan.vertices[p]));
        std::copy(src, src + d, x_batch.row(p));
    }

    forward_stack(net.encoder, x_batch, enc_caches,
                  plan.encoder_dropout.empty() ? nullptr : &plan.encoder_dropout);
    const Matrix& z = enc_caches.back().post;

    z_sub.resize(e_count, latent);
    x_sub.resize(e_count, d);
    for (std::size_t p = 0; p < e_count; ++p) {
        const int pos = plan.endpoint_pos[p];
        std::copy(z.row(pos), z.row(pos) + latent, z_sub.row(p));
        std::copy(x_batch.row(pos), x_batch.row(pos) + d, x_sub.row(p));
    }

    forward_stack(net.decoder, z_sub, dec_caches,
                  plan.decoder_dropout.empty() ? nullptr : &plan.decoder_dropout);
    const Matrix& recon = dec_caches.back().post;

    if (grads) {
        d_z.resize(u_count, latent);
        d_z.fill(0.0);
    }

    // graph-layout terms, averaged over the batch edges
    const std::size_t n_edges = plan.edge_pos.size();
    const double edge_norm = n_edges > 0 ? 1.0 / static_cast<double>(n_edges) : 0.0;
    double umap_loss = 0.0;
    std::vector<double> diff(latent);
    const auto pair_dist = [&](int pi, int pj) {
        return euclidean_distance(z.row(static_cast<std::size_t>(pi)),
                                  z.row(static_cast<std::size_t>(pj)), latent);
    };
    const auto distribute = [&](int pi, int pj, double dist, double coeff) {
        if (!grads || coeff == 0.0) return;
        const double inv = 1.0 / std::max(dist, 1e-12);
        const double* zi = z.row(static_cast<std::size_t>(pi));
        const double* zj = z.row(static_cast<std::size_t>(pj));
        double* gi = d_z.row(static_cast<std::size_t>(pi));
        double* gj = d_z.row(static_cast<std::size_t>(pj));
        for (std::size_t l = 0; l < latent; ++l) {
            const double dir = (zi[l] - zj[l]) * inv;
            gi[l] += coeff * dir;
            gj[l] -= coeff * dir;
        }
    };

    for (const auto& [pi, pj] : plan.edge_pos) {
        const double dist = pair_dist(pi, pj);
        const PairTerm t = attraction_term(dist, curve);
        umap_loss += t.loss;
        distribute(pi, pj, dist, t.dloss_ddist * edge_norm);
    }
    for (const auto& [pi, pk] : plan.negative_pos) {
        const double dist = pair_dist(pi, pk);
        const PairTerm t = repulsion_term(dist, curve);
        umap_loss += config.repulsion_strength * t.loss;
        distribute(pi, pk, dist, config.repulsion_strength * t.dloss_ddist * edge_norm);
    }
    out.umap = umap_loss * edge_norm;

    // reconstruction term: mean squared error over endpoint vertices
    double recon_loss = 0.0;
    if (e_count > 0) {
        for (std::size_t i = 0; i < recon.size(); ++i) {
            const double r = recon.data()[i] - x_sub.data()[i];
            recon_loss += r * r;
        }
        recon_loss /= static_cast<double>(e_count * d);
    }
    out.recon = recon_loss;

    double l2 = 0.0;
    for (const auto& layer : net.encoder)
        for (std::size_t i = 0; i < layer.w.size(); ++i) l2 += layer.w.data()[i] * layer.w.data()[i];
    for (const auto& layer : net.decoder)
        for (std::size_t i = 0; i < layer.w.size(); ++i) l2 += layer.w.data()[i] * layer.w.data()[i];
    out.l2 = l2;

    out.total = out.umap + config.recon_loss_weight * out.recon + config.l2_reg * out.l2;

    if (!grads) return out;

    // decoder backward from the reconstruction term
    d_recon.resize(e_count, d);
    if (e_count > 0) {
        const double scale = config.recon_loss_weight * 2.0 / static_cast<double>(e_count * d);
        for (std::size_t i = 0; i < d_recon.size(); ++i)
            d_recon.data()[i] = scale * (recon.data()[i] - x_sub.data()[i]);
        thread_local Matrix d_z_sub;
        backward_stack(net.decoder, z_sub, dec_caches,
                       plan.decoder_dropout.empty() ? nullptr : &plan.decoder_dropout,
                       d_recon, grads->decoder_w, grads->decoder_b, &d_z_sub);
        for (std::size_t p = 0; p < e_count; ++p) {
            const int pos = plan.endpoint_pos[p];
            double* dst = d_z.row(static_cast<std::size_t>(pos));
            const double* src = d_z_sub.row(p);
            for (std::size_t l = 0; l < latent; ++l) dst[l] += src[l];
        }
    }

    backward_stack(net.encoder, x_batch, enc_caches,
                   plan.encoder_dropout.empty() ? nullptr : &plan.encoder_dropout,
                   d_z, grads->encoder_w, grads->encoder_b, nullptr);

    const double two_l2 = 2.0 * config.l2_reg;
    for (std::size_t l = 0; l < net.encoder.size(); ++l)
        for (std::size_t i = 0; i < net.encoder[l].w.size(); ++i)
            grads->encoder_w[l].data()[i] += two_l2 * net.encoder[l].w.data()[i];
    for (std::size_t l = 0; l < net.decoder.size(); ++l)
        for (std::size_t i = 0; i < net.decoder[l].w.size(); ++i)
            grads->decoder_w[l].data()[i] += two_l2 * net.decoder[l].w.data()[i];

    return out;
}

namespace {

void draw_minibatch(Minibatch& mb, const FuzzyGraph& graph,
                    const std::vector<std::size_t>& edge_ids, std::size_t begin,
                    std::size_t end, int negative_sample_rate, std::size_t n_vertices,
                    Rng& rng) {
    mb.edges.clear();
    mb.negatives.clear();
    for (std::size_t e = begin; e < end; ++e) {
        const FuzzyEdge& edge = graph.edges[edge_ids[e]];
        mb.edges.emplace_back(edge.from, edge.to);
    }
    for (std::size_t e = begin; e < end; ++e) {
        const int head = graph.edges[edge_ids[e]].from;
        for (int s = 0; s < negative_sample_rate; ++s) {
            int k = static_cast<int>(rng.below(n_vertices - 1));
            if (k >= head) ++k; // uniform over the other vertices
            mb.negatives.emplace_back(head, k);
        }
    }
}

struct AttemptResult {
    Network net;
    TrainingDiagnostics diagnostics;
    bool finite = true;
};

AttemptResult train_attempt(const Matrix& class_features, const AutoencoderConfig& config,
                            std::size_t k, const SimilarityCurve& curve,
                            std::uint64_t train_seed, const EpochCallback& callback) {
    const std::size_t m = class_features.rows();
    AttemptResult result;

    Rng init_rng = derive_stream(train_seed, "ae.init");
    result.net = make_network(class_features.cols(), config, init_rng);
    result.diagnostics.curve_a = curve.a;
    result.diagnostics.curve_b = curve.b;

    const FuzzyGraph graph = build_fuzzy_graph(class_features, k, 1);

    Adam adam;
    adam.lr = config.learning_rate;
    auto params = parameter_tensors(result.net);
    adam.init(params);

    NetworkGrads grads = make_grads(result.net);

    Rng sgd_rng = derive_stream(train_seed, "ae.sgd");
    std::vector<std::size_t> edge_order(graph.edges.size());
    for (std::size_t i = 0; i < edge_order.size(); ++i) edge_order[i] = i;
    std::vector<std::size_t> included;

    double prev_loss = std::numeric_limits<double>::quiet_NaN();
    int small_improvement_streak = 0;

    for (int epoch = 0; epoch < config.n_epochs; ++epoch) {
        sgd_rng.shuffle(edge_order);
        included.clear();
        for (const std::size_t id : edge_order) {
            if (sgd_rng.bernoulli(graph.edges[id].weight)) included.push_back(id);
        }

        double loss_sum = 0.0;
        std::size_t edge_count = 0;
        const std::size_t bs = static_cast<std::size_t>(config.batch_size);
        Minibatch mb;
        BatchPlan plan;
        for (std::size_t begin = 0; begin < included.size(); begin += bs) {
            const std::size_t end = std::min(included.size(), begin + bs);
            draw_minibatch(mb, graph, included, begin, end, config.negative_sample_rate, m,
                           sgd_rng);
            fill_plan(plan, mb, config, true, &sgd_rng);
            zero_grads(grads);
            const LossBreakdown lb =
                batch_loss(result.net, class_features, plan, config, curve, &grads);
            if (!std::isfinite(lb.total)) {
                result.finite = false;
                return result;
            }
            adam.step(params, grad_tensors(grads));
            loss_sum += lb.total * static_cast<double>(end - begin);
            edge_count += end - begin;
        }

        const double epoch_loss =
            edge_count > 0 ? loss_sum / static_cast<double>(edge_count) : prev_loss;
        result.diagnostics.final_loss = epoch_loss;
        result.diagnostics.epochs_run = epoch + 1;
        if (callback) callback({epoch, epoch_loss}, result.net);

        if (epoch > 0 && std::isfinite(prev_loss)) {
            const double rel =
                (prev_loss - epoch_loss) / std::max(std::abs(prev_loss), 1e-300);
            if (rel < kEarlyStopTol) {
                if (++small_improvement_streak >= kEarlyStopPatience) {
                    result.diagnostics.early_stopped = true;
                    prev_loss = epoch_loss;
                    break;
                }
            } else {
                small_improvement_streak = 0;
            }
        }
        prev_loss = epoch_loss;
    }

    for (const auto& layer : result.net.encoder)
        for (std::size_t i = 0; i < layer.w.size(); ++i)
            if (!std::isfinite(layer.w.data()[i])) result.finite = false;
    for (const auto& layer : result.net.decoder)
        for (std::size_t i = 0; i < layer.w.size(); ++i)
            if (!std::isfinite(layer.w.data()[i])) result.finite = false;
    return result;
}

} // namespace

Reconstructor train_class_reconstructor(const Matrix& class_features,
                                        const AutoencoderConfig& config,
                                        std::uint64_t train_seed, int class_id,
                                        const EpochCallback& callback) {
    config.validate();
    const std::size_t m = class_features.rows();
    const std::size_t d = class_features.cols();
    if (static_cast<std::size_t>(config.latent_dim) >= d)
        throw ValidationError("latent_dim " + std::to_string(config.latent_dim) +
                              " must be smaller than the feature dimension " + std::to_string(d));
    for (std::size_t i = 0; i < class_features.size(); ++i) {
        const double v = class_features.data()[i];
        if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
            throw ValidationError("class " + std::to_string(class_id) +
                                  ": features must be min-max normalized to [0, 1]");
    }

    std::size_t k = static_cast<std::size_t>(config.n_neighbors);
    bool lowered = false;
    if (m <= k) {
        if (m < 4)
            throw TrainingError("class " + std::to_string(class_id) + " has only " +
                                std::to_string(m) + " samples; need at least 4");
        k = m - 1;
        lowered = true;
    }

    const SimilarityCurve primary = fit_similarity_curve(config.spread, config.min_dist);
    AttemptResult attempt = train_attempt(class_features, config, k, primary, train_seed, callback);

    if (!attempt.finite) {
        // one retry with the reduced spread/min_dist pair
        if (config.spread > 1.0) {
            const SimilarityCurve fallback =
                fit_similarity_curve(config.spread - 1.0, std::max(0.0, config.min_dist - 1.0));
            attempt = train_attempt(class_features, config, k, fallback, train_seed, callback);
            attempt.diagnostics.used_fallback_curve = true;
        }
        if (!attempt.finite)
            throw TrainingError("class " + std::to_string(class_id) +
                                ": non-finite training loss after fallback retry");
    }

    Reconstructor rec;
    rec.net = std::move(attempt.net);
    rec.class_id = class_id;
    rec.diagnostics = attempt.diagnostics;
    rec.diagnostics.lowered_n_neighbors = lowered;
    return rec;
}

std::vector<double> reconstruct(const Network& net, const double* x) {
    Matrix input(1, net.input_dim);
    std::copy(x, x + net.input_dim, input.row(0));
    std::vector<LayerCache> enc, dec;
    forward_stack(net.encoder, input, enc, nullptr);
    forward_stack(net.decoder, enc.back().post, dec, nullptr);
    const Matrix& r = dec.back().post;
    return {r.data(), r.data() + r.size()};
}

double reconstruction_error(const Network& net, const double* x) {
    const std::vector<double> r = reconstruct(net, x);
    return euclidean_distance(r.data(), x, net.input_dim);
}

Matrix error_table(const std::vector<Reconstructor>& reconstructors, const Matrix& features,
                   unsigned threads) {
    const std::size_t n = features.rows();
    const std::size_t n_classes = reconstructors.size();
    const std::size_t d = features.cols();
    for (const auto& rec : reconstructors) {
        if (rec.net.input_dim != d)
            throw ValidationError("model expects dimension " + std::to_string(rec.net.input_dim) +
                                  ", features have " + std::to_string(d));
    }
    Matrix delta(n, n_classes);

    constexpr std::size_t kChunk = 256;
    const std::size_t chunks_per_class = (n + kChunk - 1) / kChunk;
    const std::size_t tasks = chunks_per_class * n_classes;

    parallel_for(tasks, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        std::vector<LayerCache> enc, dec;
        Matrix block;
        for (std::size_t task = begin; task < end; ++task) {
            const std::size_t c = task / chunks_per_class;
            const std::size_t row0 = (task % chunks_per_class) * kChunk;
            const std::size_t rows = std::min(kChunk, n - row0);
            block.resize(rows, d);
            std::copy(features.row(row0), features.row(row0) + rows * d, block.data());
            forward_stack(reconstructors[c].net.encoder, block, enc, nullptr);
            forward_stack(reconstructors[c].net.decoder, enc.back().post, dec, nullptr);
            const Matrix& r = dec.back().post;
            for (std::size_t i = 0; i < rows; ++i) {
                delta(row0 + i, c) = euclidean_distance(r.row(i), block.row(i), d);
            }
        }
    });
    return delta;
}

LossBreakdown evaluate_full_loss(const Network& net, const Matrix& features,
                                 const FuzzyGraph& graph, const AutoencoderConfig& config,
                                 const SimilarityCurve& curve, std::uint64_t eval_seed) {
    Rng rng = derive_stream(eval_seed, "ae.eval");
    Minibatch mb;
    mb.edges.reserve(graph.edges.size());
    for (const auto& edge : graph.edges) mb.edges.emplace_back(edge.from, edge.to);
    const std::size_t m = features.rows();
    for (const auto& edge : graph.edges) {
        for (int s = 0; s < config.negative_sample_rate; ++s) {
            int k = static_cast<int>(rng.below(m - 1));
            if (k >= edge.from) ++k;
            mb.negatives.emplace_back(edge.from, k);
        }
    }
    const BatchPlan plan = plan_batch(mb, config, m, false, nullptr);
    return batch_loss(net, features, plan, config, curve, nullptr);
}

} // namespace rer
