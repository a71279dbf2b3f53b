#include "uatd/models.hpp"

#include "uatd/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace uatd::models {

namespace {

// He initialization for ReLU layers.
void init_he(Matrix& w, int fan_in, Rng& rng) {
    const double s = std::sqrt(2.0 / fan_in);
    for (double& v : w.data) v = rng.normal(0.0, s);
}

// Heads start small so an untrained model emits near-uniform probabilities.
void init_head(Matrix& w, int fan_in, Rng& rng) {
    const double s = 0.1 * std::sqrt(1.0 / fan_in);
    for (double& v : w.data) v = rng.normal(0.0, s);
}

std::vector<uint8_t> draw_mask(size_t n, double rate, Rng& rng) {
    std::vector<uint8_t> mask(n);
    for (size_t i = 0; i < n; ++i) mask[i] = rng.bernoulli(1.0 - rate) ? 1 : 0;
    return mask;
}

}  // namespace

// ---------------------------------------------------------------------------
// SpatialMlp
// ---------------------------------------------------------------------------

SpatialMlp::SpatialMlp(const SpatialMlpConfig& config, Rng& rng) : cfg(config) {
    if (cfg.input_dim < 1 || cfg.hidden_dim < 1 || cfg.num_classes < 1)
        throw std::invalid_argument("SpatialMlp: dimensions must be positive");
    w1 = Matrix(cfg.hidden_dim, cfg.input_dim);
    b1.assign(cfg.hidden_dim, 0.0);
    w2 = Matrix(cfg.num_classes, cfg.hidden_dim);
    b2.assign(cfg.num_classes, 0.0);
    init_he(w1, cfg.input_dim, rng);
    init_head(w2, cfg.hidden_dim, rng);
}

void SpatialMlp::forward(const Matrix& inputs, Matrix& probs, Matrix* embeddings) const {
    if (inputs.cols != cfg.input_dim)
        throw std::invalid_argument("SpatialMlp: feature dimension mismatch");
    Matrix h_pre, h, logits;
    kernels::dense_forward(inputs, w1, b1, h_pre);
    kernels::relu_forward(h_pre, h);
    kernels::dense_forward(h, w2, b2, logits);
    kernels::softmax_rows(logits, probs);
    if (embeddings) *embeddings = std::move(h);
}

Matrix SpatialMlp::predict_probs(const Matrix& inputs, InferenceMode mode, Rng* rng) const {
    if (mode == InferenceMode::deterministic) {
        Matrix probs;
        forward(inputs, probs, nullptr);
        return probs;
    }
    if (!rng) throw std::invalid_argument("stochastic inference requires an rng");
    Cache cache;
    forward_train(inputs, *rng, cache);
    return std::move(cache.probs);
}

void SpatialMlp::forward_train(const Matrix& inputs, Rng& rng, Cache& cache) const {
    if (inputs.cols != cfg.input_dim)
        throw std::invalid_argument("SpatialMlp: feature dimension mismatch");
    cache.x = inputs;
    kernels::dense_forward(cache.x, w1, b1, cache.h_pre);
    kernels::relu_forward(cache.h_pre, cache.h);
    cache.mask = draw_mask(cache.h.data.size(), cfg.dropout_rate, rng);
    kernels::dropout_forward(cache.h, cache.mask, cfg.dropout_rate, cache.h_drop);
    kernels::dense_forward(cache.h_drop, w2, b2, cache.logits);
    kernels::softmax_rows(cache.logits, cache.probs);
}

void SpatialMlp::backward(const Cache& cache, const Matrix& dlogits, Grads& grads) const {
    Matrix dh_drop, dh, dh_pre;
    kernels::dense_backward_params(dlogits, cache.h_drop, grads.dw2, grads.db2);
    kernels::dense_backward_input(dlogits, w2, dh_drop);
    kernels::dropout_backward(dh_drop, cache.mask, cfg.dropout_rate, dh);
    kernels::relu_backward(dh, cache.h_pre, dh_pre);
    kernels::dense_backward_params(dh_pre, cache.x, grads.dw1, grads.db1);
}

void SpatialMlp::Grads::zero() {
    dw1.data.assign(dw1.data.size(), 0.0);
    db1.assign(db1.size(), 0.0);
    dw2.data.assign(dw2.data.size(), 0.0);
    db2.assign(db2.size(), 0.0);
}

SpatialMlp::Grads SpatialMlp::make_grads() const {
    Grads g;
    g.dw1 = Matrix(w1.rows, w1.cols);
    g.db1.assign(b1.size(), 0.0);
    g.dw2 = Matrix(w2.rows, w2.cols);
    g.db2.assign(b2.size(), 0.0);
    return g;
}

std::vector<std::span<double>> SpatialMlp::param_views() {
    return {std::span<double>(w1.data), std::span<double>(b1),
            std::span<double>(w2.data), std::span<double>(b2)};
}

std::vector<std::span<double>> SpatialMlp::grad_views(Grads& g) {
    return {std::span<double>(g.dw1.data), std::span<double>(g.db1),
            std::span<double>(g.dw2.data), std::span<double>(g.db2)};
}

// ---------------------------------------------------------------------------
// DilatedTcn
// ---------------------------------------------------------------------------

DilatedTcn::DilatedTcn(const DilatedTcnConfig& config, Rng& rng) : cfg(config) {
    if (cfg.input_dim < 1 || cfg.channels < 1 || cfg.layers < 1 || cfg.num_classes < 1)
        throw std::invalid_argument("DilatedTcn: dimensions must be positive");
    in_w = Matrix(cfg.channels, cfg.input_dim);
    in_b.assign(cfg.channels, 0.0);
    init_he(in_w, cfg.input_dim, rng);
    layers.resize(cfg.layers);
    for (Layer& l : layers) {
        l.conv_w = Matrix(cfg.channels, 3 * cfg.channels);
        l.conv_b.assign(cfg.channels, 0.0);
        l.proj_w = Matrix(cfg.channels, cfg.channels);
        l.proj_b.assign(cfg.channels, 0.0);
        init_he(l.conv_w, 3 * cfg.channels, rng);
        init_he(l.proj_w, cfg.channels, rng);
    }
    head_w = Matrix(cfg.num_classes, cfg.channels);
    head_b.assign(cfg.num_classes, 0.0);
    init_head(head_w, cfg.channels, rng);
}

void DilatedTcn::forward_train(const Matrix& inputs, Rng* rng, Cache& cache) const {
    if (inputs.cols != cfg.input_dim)
        throw std::invalid_argument("DilatedTcn: input dimension mismatch");
    cache.x = inputs;
    kernels::dense_forward(cache.x, in_w, in_b, cache.stem);
    cache.layer.assign(cfg.layers, LayerCache{});
    const Matrix* cur = &cache.stem;
    for (int l = 0; l < cfg.layers; ++l) {
        LayerCache& lc = cache.layer[l];
        lc.input = *cur;
        kernels::conv1d_forward(lc.input, layers[l].conv_w, layers[l].conv_b,
                                dilation_of(l), cfg.causal, lc.conv_out);
        kernels::relu_forward(lc.conv_out, lc.act);
        kernels::dense_forward(lc.act, layers[l].proj_w, layers[l].proj_b, lc.proj_out);
        if (rng) {
            lc.mask = draw_mask(lc.proj_out.data.size(), cfg.dropout_rate, *rng);
            kernels::dropout_forward(lc.proj_out, lc.mask, cfg.dropout_rate, lc.dropped);
        } else {
            lc.dropped = lc.proj_out;
        }
        lc.output = lc.input;
        for (size_t i = 0; i < lc.output.data.size(); ++i)
            lc.output.data[i] += lc.dropped.data[i];
        cur = &lc.output;
    }
    kernels::dense_forward(*cur, head_w, head_b, cache.logits);
    kernels::softmax_rows(cache.logits, cache.probs);
}

Matrix DilatedTcn::predict_probs(const Matrix& inputs, InferenceMode mode, Rng* rng) const {
    if (mode == InferenceMode::stochastic && !rng)
        throw std::invalid_argument("stochastic inference requires an rng");
    Cache cache;
    forward_train(inputs, mode == InferenceMode::stochastic ? rng : nullptr, cache);
    return std::move(cache.probs);
}

void DilatedTcn::backward(const Cache& cache, const Matrix& dlogits, Grads& grads) const {
    const Matrix& last = cfg.layers > 0 ? cache.layer.back().output : cache.stem;
    Matrix dcur;
    kernels::dense_backward_params(dlogits, last, grads.dhead_w, grads.dhead_b);
    kernels::dense_backward_input(dlogits, head_w, dcur);

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const LayerCache& lc = cache.layer[l];
        // residual: dcur reaches both the branch and the layer input
        Matrix ddropped, dproj, dact, dconv, dinput_branch;
        if (!lc.mask.empty()) {
            kernels::dropout_backward(dcur, lc.mask, cfg.dropout_rate, ddropped);
        } else {
            ddropped = dcur;
        }
        kernels::dense_backward_params(ddropped, lc.act, grads.layer[l].dproj_w,
                                       grads.layer[l].dproj_b);
        kernels::dense_backward_input(ddropped, layers[l].proj_w, dproj);
        kernels::relu_backward(dproj, lc.conv_out, dact);
        kernels::conv1d_backward_params(dact, lc.input, dilation_of(l), cfg.causal,
                                        grads.layer[l].dconv_w, grads.layer[l].dconv_b);
        kernels::conv1d_backward_input(dact, layers[l].conv_w, dilation_of(l), cfg.causal,
                                       dinput_branch);
        for (size_t i = 0; i < dcur.data.size(); ++i)
            dcur.data[i] += dinput_branch.data[i];
    }
    kernels::dense_backward_params(dcur, cache.x, grads.din_w, grads.din_b);
}

void DilatedTcn::Grads::zero() {
    din_w.data.assign(din_w.data.size(), 0.0);
    din_b.assign(din_b.size(), 0.0);
    for (LayerGrads& lg : layer) {
        lg.dconv_w.data.assign(lg.dconv_w.data.size(), 0.0);
        lg.dconv_b.assign(lg.dconv_b.size(), 0.0);
        lg.dproj_w.data.assign(lg.dproj_w.data.size(), 0.0);
        lg.dproj_b.assign(lg.dproj_b.size(), 0.0);
    }
    dhead_w.data.assign(dhead_w.data.size(), 0.0);
    dhead_b.assign(dhead_b.size(), 0.0);
}

DilatedTcn::Grads DilatedTcn::make_grads() const {
    Grads g;
    g.din_w = Matrix(in_w.rows, in_w.cols);
    g.din_b.assign(in_b.size(), 0.0);
    g.layer.resize(layers.size());
    for (size_t l = 0; l < layers.size(); ++l) {
        g.layer[l].dconv_w = Matrix(layers[l].conv_w.rows, layers[l].conv_w.cols);
        g.layer[l].dconv_b.assign(layers[l].conv_b.size(), 0.0);
        g.layer[l].dproj_w = Matrix(layers[l].proj_w.rows, layers[l].proj_w.cols);
        g.layer[l].dproj_b.assign(layers[l].proj_b.size(), 0.0);
    }
    g.dhead_w = Matrix(head_w.rows, head_w.cols);
    g.dhead_b.assign(head_b.size(), 0.0);
    return g;
}

std::vector<std::span<double>> DilatedTcn::param_views() {
    std::vector<std::span<double>> v;
    v.emplace_back(in_w.data);
    v.emplace_back(in_b);
    for (Layer& l : layers) {
        v.emplace_back(l.conv_w.data);
        v.emplace_back(l.conv_b);
        v.emplace_back(l.proj_w.data);
        v.emplace_back(l.proj_b);
    }
    v.emplace_back(head_w.data);
    v.emplace_back(head_b);
    return v;
}

std::vector<std::span<double>> DilatedTcn::grad_views(Grads& g) {
    std::vector<std::span<double>> v;
    v.emplace_back(g.din_w.data);
    v.emplace_back(g.din_b);
    for (Grads::LayerGrads& lg : g.layer) {
        v.emplace_back(lg.dconv_w.data);
        v.emplace_back(lg.dconv_b);
        v.emplace_back(lg.dproj_w.data);
        v.emplace_back(lg.dproj_b);
    }
    v.emplace_back(g.dhead_w.data);
    v.emplace_back(g.dhead_b);
    return v;
}

// ---------------------------------------------------------------------------

void spatial_forward(const SpatialMlp& model, const FeatureSequence& features,
                     Matrix& probs, Matrix& embeddings) {
    model.forward(features.frames, probs, &embeddings);
}

Matrix temporal_forward(const DilatedTcn& model, const Matrix& embeddings) {
    return model.predict_probs(embeddings, InferenceMode::deterministic, nullptr);
}

}  // namespace uatd::models
