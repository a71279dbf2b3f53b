#pragma once

#include "uatd/core.hpp"

#include <span>
#include <vector>

namespace uatd::models {

enum class InferenceMode { deterministic, stochastic };

// Contract for anything the Monte-Carlo uncertainty machinery can probe:
// stochastic mode must apply fresh dropout masks on every call, deterministic
// mode must be repeatable.
class StochasticClassifier {
public:
    virtual ~StochasticClassifier() = default;
    virtual int num_classes() const = 0;
    // inputs: T x D, returns T x C row-normalized probabilities.
    virtual Matrix predict_probs(const Matrix& inputs, InferenceMode mode, Rng* rng) const = 0;
};

// ---------------------------------------------------------------------------
// Per-frame classifier: input -> hidden (ReLU) -> dropout -> head -> softmax.
// The hidden activation (pre-dropout) doubles as the frame embedding handed
// to the temporal model.
// ---------------------------------------------------------------------------

struct SpatialMlpConfig {
    int input_dim = 0;
    int hidden_dim = 64;
    int num_classes = 0;
    double dropout_rate = 0.5;
};

class SpatialMlp : public StochasticClassifier {
public:
    SpatialMlpConfig cfg;
    Matrix w1;               // hidden x input
    std::vector<double> b1;  // hidden
    Matrix w2;               // classes x hidden
    std::vector<double> b2;  // classes

    SpatialMlp() = default;
    SpatialMlp(const SpatialMlpConfig& config, Rng& rng);

    int num_classes() const override { return cfg.num_classes; }
    int embedding_dim() const { return cfg.hidden_dim; }

    Matrix predict_probs(const Matrix& inputs, InferenceMode mode, Rng* rng) const override;

    // Deterministic pass exposing both probabilities and embeddings.
    void forward(const Matrix& inputs, Matrix& probs, Matrix* embeddings) const;

    struct Cache {
        Matrix x, h_pre, h, h_drop, logits, probs;
        std::vector<uint8_t> mask;
    };
    struct Grads {
        Matrix dw1;
        std::vector<double> db1;
        Matrix dw2;
        std::vector<double> db2;
        void zero();
    };

    void forward_train(const Matrix& inputs, Rng& rng, Cache& cache) const;
    void backward(const Cache& cache, const Matrix& dlogits, Grads& grads) const;

    Grads make_grads() const;
    std::vector<std::span<double>> param_views();
    static std::vector<std::span<double>> grad_views(Grads& g);
};

// ---------------------------------------------------------------------------
// Single-stage dilated temporal convolution network. Layer l uses dilation
// 2^l: dilated conv (k=3) -> ReLU -> 1x1 conv -> dropout -> residual add.
// The causal variant only looks backward in time.
// ---------------------------------------------------------------------------

struct DilatedTcnConfig {
    int input_dim = 0;
    int channels = 64;
    int layers = 10;
    int num_classes = 0;
    double dropout_rate = 0.5;
    bool causal = false;
};

class DilatedTcn : public StochasticClassifier {
public:
    struct Layer {
        Matrix conv_w;              // channels x (3*channels)
        std::vector<double> conv_b;
        Matrix proj_w;              // channels x channels
        std::vector<double> proj_b;
    };

    DilatedTcnConfig cfg;
    Matrix in_w;                // channels x input_dim
    std::vector<double> in_b;
    std::vector<Layer> layers;
    Matrix head_w;              // classes x channels
    std::vector<double> head_b;

    DilatedTcn() = default;
    DilatedTcn(const DilatedTcnConfig& config, Rng& rng);

    int num_classes() const override { return cfg.num_classes; }
    int dilation_of(int layer) const { return 1 << layer; }

    Matrix predict_probs(const Matrix& inputs, InferenceMode mode, Rng* rng) const override;

    struct LayerCache {
        Matrix input, conv_out, act, proj_out, dropped, output;
        std::vector<uint8_t> mask;
    };
    struct Cache {
        Matrix x, stem;
        std::vector<LayerCache> layer;
        Matrix logits, probs;
    };
    struct Grads {
        Matrix din_w;
        std::vector<double> din_b;
        struct LayerGrads {
            Matrix dconv_w;
            std::vector<double> dconv_b;
            Matrix dproj_w;
            std::vector<double> dproj_b;
        };
        std::vector<LayerGrads> layer;
        Matrix dhead_w;
        std::vector<double> dhead_b;
        void zero();
    };

    // rng == nullptr disables dropout (deterministic pass with cache).
    void forward_train(const Matrix& inputs, Rng* rng, Cache& cache) const;
    void backward(const Cache& cache, const Matrix& dlogits, Grads& grads) const;

    Grads make_grads() const;
    std::vector<std::span<double>> param_views();
    static std::vector<std::span<double>> grad_views(Grads& g);
};

// T x C probabilities plus T x D' embeddings; throws std::invalid_argument on
// a feature-dimension mismatch.
void spatial_forward(const SpatialMlp& model, const FeatureSequence& features,
                     Matrix& probs, Matrix& embeddings);

// T x C probabilities from frame embeddings.
Matrix temporal_forward(const DilatedTcn& model, const Matrix& embeddings);

}  // namespace uatd::models
