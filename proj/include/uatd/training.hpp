#pragma once

#include "uatd/core.hpp"
#include "uatd/models.hpp"

#include <span>
#include <string>
#include <vector>

namespace uatd::training {

// Cross entropy over labeled frames only; unlabeled frames (label 0)
// contribute nothing. Normalized by T (default) or by the labeled count.
double masked_cross_entropy(const Matrix& probs, const LabelSequence& labels,
                            CeNormalization norm);

// dL/dprobs for the masked cross entropy.
Matrix masked_cross_entropy_grad(const Matrix& probs, const LabelSequence& labels,
                                 CeNormalization norm);

// Truncated mean squared error over adjacent log-probability differences:
// delta^2 below gamma, gamma otherwise, averaged over T*C. Probabilities are
// clamped at 1e-8 before the log.
double smoothing_loss(const Matrix& probs, double gamma);

Matrix smoothing_loss_grad(const Matrix& probs, double gamma);

// ce + lambda * smoothing
double combined_loss(const Matrix& probs, const LabelSequence& labels, double lambda,
                     double gamma, CeNormalization norm);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // L2 added to the gradient
};

class Adam {
public:
    Adam(const std::vector<std::span<double>>& params, const AdamConfig& cfg);
    // lr overrides the configured rate (for schedules); pass < 0 to keep it.
    void step(const std::vector<std::span<double>>& params,
              const std::vector<std::span<double>>& grads, double lr = -1.0);

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long steps_ = 0;
};

struct StageLog {
    std::string stage;               // "spatial" | "temporal"
    std::vector<double> epoch_loss;  // mean loss per epoch
};

// Minimizes masked cross entropy with batches drawn from labeled frames
// only. Step-decay learning-rate schedule. Throws std::invalid_argument when
// the dataset has no labeled frame.
void optimize_spatial(models::SpatialMlp& model,
                      const std::vector<const FeatureSequence*>& features,
                      const std::vector<const LabelSequence*>& labels,
                      const TrainConfig& cfg, Rng& rng, StageLog* log);

// Minimizes masked CE + lambda * smoothing over whole sequences with a
// cosine-annealed learning rate.
void optimize_temporal(models::DilatedTcn& model, const std::vector<Matrix>& embeddings,
                       const std::vector<const LabelSequence*>& labels,
                       const TrainConfig& cfg, Rng& rng, StageLog* log);

struct TrainSequence {
    const FeatureSequence* features = nullptr;
    const AnnotationSet* annotation = nullptr;
};

struct DiffusionSnapshot {
    std::string stage;  // "spatial" | "temporal"
    int index = 0;      // 1-based position in the history
    std::vector<LabelSequence> pseudo;
    double labelling_rate = 0.0;
    double labelling_accuracy = -1.0;  // -1 when no ground truth available
};

struct LoopResult {
    std::vector<DiffusionSnapshot> history;
    std::vector<StageLog> stages;
    std::vector<LabelSequence> final_pseudo;
};

// Loop training: pseudo labels start as the bare timestamps; the spatial
// classifier and the temporal model are optimized in alternation and the
// pseudo labels are regenerated by uncertainty-aware temporal diffusion
// after every optimization stage. Diffusion always re-anchors on the
// original timestamps. History records one snapshot per diffusion:
// diffusion_rounds_spatial + loop_iterations * diffusion_rounds_temporal.
LoopResult loop_train(const std::vector<TrainSequence>& data, models::SpatialMlp& spatial,
                      models::DilatedTcn& temporal, const TrainConfig& tcfg,
                      const DiffusionConfig& dcfg);

// Deterministic end-to-end prediction: features -> embeddings -> temporal
// probabilities -> per-frame argmax class.
LabelSequence predict_sequence(const models::SpatialMlp& spatial,
                               const models::DilatedTcn& temporal,
                               const FeatureSequence& features);

}  // namespace uatd::training
