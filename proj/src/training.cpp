#include "uatd/training.hpp"

#include "uatd/diffusion.hpp"
#include "uatd/kernels.hpp"
#include "uatd/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uatd::training {

namespace {
constexpr double kLogClamp = 1e-8;
constexpr double kPi = 3.14159265358979323846;

void require_same_length(const Matrix& probs, const LabelSequence& labels) {
    if (probs.rows != labels.size())
        throw std::invalid_argument("probs and labels length mismatch");
}
}  // namespace

double masked_cross_entropy(const Matrix& probs, const LabelSequence& labels,
                            CeNormalization norm) {
    require_same_length(probs, labels);
    double sum = 0.0;
    int labeled = 0;
    for (int t = 0; t < probs.rows; ++t) {
        const int y = labels.labels[t];
        if (y == 0) continue;
        ++labeled;
        sum -= std::log(std::max(probs.at(t, y - 1), kLogClamp));
    }
    if (labeled == 0) return 0.0;
    const double denom = norm == CeNormalization::sequence_length
                             ? static_cast<double>(probs.rows)
                             : static_cast<double>(labeled);
    return sum / denom;
}

Matrix masked_cross_entropy_grad(const Matrix& probs, const LabelSequence& labels,
                                 CeNormalization norm) {
    require_same_length(probs, labels);
    Matrix grad(probs.rows, probs.cols);
    int labeled = labels.labeled_count();
    if (labeled == 0) return grad;
    const double denom = norm == CeNormalization::sequence_length
                             ? static_cast<double>(probs.rows)
                             : static_cast<double>(labeled);
    for (int t = 0; t < probs.rows; ++t) {
        const int y = labels.labels[t];
        if (y == 0) continue;
        const double p = std::max(probs.at(t, y - 1), kLogClamp);
        grad.at(t, y - 1) = -1.0 / (denom * p);
    }
    return grad;
}

double smoothing_loss(const Matrix& probs, double gamma) {
    if (probs.rows < 2) throw std::invalid_argument("smoothing loss needs T >= 2");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    const int t_len = probs.rows, c_len = probs.cols;
    double sum = 0.0;
    for (int t = 1; t < t_len; ++t) {
        for (int c = 0; c < c_len; ++c) {
            const double cur = std::log(std::max(probs.at(t, c), kLogClamp));
            const double prev = std::log(std::max(probs.at(t - 1, c), kLogClamp));
            const double delta = std::abs(cur - prev);
            sum += delta < gamma ? delta * delta : gamma;
        }
    }
    return sum / (static_cast<double>(t_len) * c_len);
}

Matrix smoothing_loss_grad(const Matrix& probs, double gamma) {
    if (probs.rows < 2) throw std::invalid_argument("smoothing loss needs T >= 2");
    const int t_len = probs.rows, c_len = probs.cols;
    const double scale = 1.0 / (static_cast<double>(t_len) * c_len);
    Matrix grad(t_len, c_len);
    for (int t = 1; t < t_len; ++t) {
        for (int c = 0; c < c_len; ++c) {
            const double pc = probs.at(t, c);
            const double pp = probs.at(t - 1, c);
            const double cur = std::log(std::max(pc, kLogClamp));
            const double prev = std::log(std::max(pp, kLogClamp));
            const double diff = cur - prev;
            const double delta = std::abs(diff);
            if (delta >= gamma || delta == 0.0) continue;  // truncated branch is flat
            const double sign = diff > 0.0 ? 1.0 : -1.0;
            const double d = scale * 2.0 * delta * sign;
            if (pc > kLogClamp) grad.at(t, c) += d / pc;
            if (pp > kLogClamp) grad.at(t - 1, c) -= d / pp;
        }
    }
    return grad;
}

double combined_loss(const Matrix& probs, const LabelSequence& labels, double lambda,
                     double gamma, CeNormalization norm) {
    return masked_cross_entropy(probs, labels, norm) + lambda * smoothing_loss(probs, gamma);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(const std::vector<std::span<double>>& params, const AdamConfig& cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step(const std::vector<std::span<double>>& params,
                const std::vector<std::span<double>>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("Adam: parameter list changed");
    ++steps_;
    const double rate = lr >= 0.0 ? lr : cfg_.lr;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, steps_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, steps_);
    for (size_t i = 0; i < params.size(); ++i) {
        std::span<double> p = params[i];
        std::span<double> g = grads[i];
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        for (size_t j = 0; j < p.size(); ++j) {
            const double grad = g[j] + cfg_.weight_decay * p[j];
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * grad;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * grad * grad;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= rate * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// stage optimizers
// ---------------------------------------------------------------------------

void optimize_spatial(models::SpatialMlp& model,
                      const std::vector<const FeatureSequence*>& features,
                      const std::vector<const LabelSequence*>& labels,
                      const TrainConfig& cfg, Rng& rng, StageLog* log) {
    if (features.size() != labels.size())
        throw std::invalid_argument("dataset size mismatch");

    // labeled frames only; batches never contain label-0 frames
    struct Sample { int seq; int frame; int label; };
    std::vector<Sample> samples;
    for (size_t s = 0; s < features.size(); ++s) {
        if (features[s]->num_frames() != labels[s]->size())
            throw std::invalid_argument("sequence length mismatch");
        for (int t = 1; t <= labels[s]->size(); ++t) {
            const int y = labels[s]->label_at(t);
            if (y != 0) samples.push_back({static_cast<int>(s), t, y});
        }
    }
    if (samples.empty()) throw std::invalid_argument("no labeled frames to train on");

    Adam adam(model.param_views(),
              {cfg.spatial_lr, 0.9, 0.999, 1e-8, cfg.spatial_weight_decay});
    models::SpatialMlp::Grads grads = model.make_grads();
    if (log) {
        log->stage = "spatial";
        log->epoch_loss.clear();
    }

    const int batch = std::max(1, cfg.spatial_batch);
    const int step_every = std::max(1, cfg.spatial_step_epochs);
    for (int epoch = 0; epoch < cfg.spatial_epochs; ++epoch) {
        const double lr =
            cfg.spatial_lr * std::pow(cfg.spatial_step_decay, epoch / step_every);
        rng.shuffle(samples);
        double epoch_sum = 0.0;
        int batches = 0;
        for (size_t begin = 0; begin < samples.size(); begin += batch) {
            const int bsz = static_cast<int>(std::min<size_t>(batch, samples.size() - begin));
            Matrix x(bsz, model.cfg.input_dim);
            std::vector<int> target(bsz);
            for (int i = 0; i < bsz; ++i) {
                const Sample& smp = samples[begin + i];
                const double* src = features[smp.seq]->frames.row(smp.frame - 1);
                std::copy(src, src + model.cfg.input_dim, x.row(i));
                target[i] = smp.label;
            }
            models::SpatialMlp::Cache cache;
            model.forward_train(x, rng, cache);

            // fused softmax + CE gradient, mean over the batch
            Matrix dlogits(bsz, model.cfg.num_classes);
            double loss = 0.0;
            for (int i = 0; i < bsz; ++i) {
                for (int c = 0; c < model.cfg.num_classes; ++c)
                    dlogits.at(i, c) = cache.probs.at(i, c) / bsz;
                dlogits.at(i, target[i] - 1) -= 1.0 / bsz;
                loss -= std::log(std::max(cache.probs.at(i, target[i] - 1), kLogClamp));
            }
            grads.zero();
            model.backward(cache, dlogits, grads);
            adam.step(model.param_views(), models::SpatialMlp::grad_views(grads), lr);
            epoch_sum += loss / bsz;
            ++batches;
        }
        if (log) log->epoch_loss.push_back(epoch_sum / std::max(1, batches));
    }
}

void optimize_temporal(models::DilatedTcn& model, const std::vector<Matrix>& embeddings,
                       const std::vector<const LabelSequence*>& labels,
                       const TrainConfig& cfg, Rng& rng, StageLog* log) {
    if (embeddings.size() != labels.size())
        throw std::invalid_argument("dataset size mismatch");
    int labeled = 0;
    for (const LabelSequence* l : labels) labeled += l->labeled_count();
    if (labeled == 0) throw std::invalid_argument("no labeled frames to train on");

    Adam adam(model.param_views(),
              {cfg.temporal_lr, 0.9, 0.999, 1e-8, cfg.temporal_weight_decay});
    models::DilatedTcn::Grads grads = model.make_grads();
    if (log) {
        log->stage = "temporal";
        log->epoch_loss.clear();
    }

    std::vector<int> order(embeddings.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.temporal_epochs; ++epoch) {
        // cosine annealing
        const double lr =
            0.5 * cfg.temporal_lr * (1.0 + std::cos(kPi * epoch / cfg.temporal_epochs));
        rng.shuffle(order);
        double epoch_sum = 0.0;
        for (int s : order) {
            models::DilatedTcn::Cache cache;
            model.forward_train(embeddings[s], &rng, cache);

            Matrix dprobs = masked_cross_entropy_grad(cache.probs, *labels[s],
                                                      cfg.ce_normalization);
            double loss = masked_cross_entropy(cache.probs, *labels[s], cfg.ce_normalization);
            if (cache.probs.rows >= 2) {
                const Matrix dsmooth = smoothing_loss_grad(cache.probs, cfg.gamma);
                for (size_t i = 0; i < dprobs.data.size(); ++i)
                    dprobs.data[i] += cfg.lambda_smooth * dsmooth.data[i];
                loss += cfg.lambda_smooth * smoothing_loss(cache.probs, cfg.gamma);
            }
            Matrix dlogits;
            kernels::softmax_backward(dprobs, cache.probs, dlogits);

            grads.zero();
            model.backward(cache, dlogits, grads);
            adam.step(model.param_views(), models::DilatedTcn::grad_views(grads), lr);
            epoch_sum += loss;
        }
        if (log) log->epoch_loss.push_back(epoch_sum / embeddings.size());
    }
}

// ---------------------------------------------------------------------------
// loop training
// ---------------------------------------------------------------------------

namespace {

std::vector<const LabelSequence*> label_ptrs(const std::vector<LabelSequence>& labels) {
    std::vector<const LabelSequence*> out;
    out.reserve(labels.size());
    for (const LabelSequence& l : labels) out.push_back(&l);
    return out;
}

DiffusionSnapshot make_snapshot(const std::string& stage, int index,
                                const std::vector<LabelSequence>& pseudo,
                                const std::vector<TrainSequence>& data) {
    DiffusionSnapshot snap;
    snap.stage = stage;
    snap.index = index;
    snap.pseudo = pseudo;
    long total = 0, nonzero = 0, correct = 0;
    bool have_gt = true;
    for (size_t s = 0; s < pseudo.size(); ++s) {
        total += pseudo[s].size();
        const LabelSequence* gt = data[s].annotation->full_labels.has_value()
                                      ? &*data[s].annotation->full_labels
                                      : nullptr;
        if (!gt) have_gt = false;
        for (int t = 1; t <= pseudo[s].size(); ++t) {
            const int y = pseudo[s].label_at(t);
            if (y == 0) continue;
            ++nonzero;
            if (gt && gt->label_at(t) == y) ++correct;
        }
    }
    snap.labelling_rate = total > 0 ? static_cast<double>(nonzero) / total : 0.0;
    if (have_gt) snap.labelling_accuracy = nonzero > 0 ? static_cast<double>(correct) / nonzero : 1.0;
    return snap;
}

}  // namespace

LoopResult loop_train(const std::vector<TrainSequence>& data, models::SpatialMlp& spatial,
                      models::DilatedTcn& temporal, const TrainConfig& tcfg,
                      const DiffusionConfig& dcfg) {
    if (data.empty()) throw std::invalid_argument("empty dataset");
    for (const TrainSequence& seq : data) {
        std::vector<std::string> v = validate(*seq.annotation, *seq.features);
        if (!v.empty())
            throw std::invalid_argument("invalid sequence " + seq.annotation->sequence_id +
                                        ": " + v.front());
        if (seq.annotation->num_classes != spatial.num_classes())
            throw std::invalid_argument("model output dimension does not match the class count");
    }
    if (dcfg.mc_passes < 2)
        throw std::invalid_argument("uncertainty estimation needs K >= 2 passes");

    Rng rng(tcfg.seed);
    LoopResult result;

    std::vector<const FeatureSequence*> feats;
    for (const TrainSequence& seq : data) feats.push_back(seq.features);

    // initial pseudo labels: the bare timestamps
    std::vector<LabelSequence> pseudo;
    for (const TrainSequence& seq : data)
        pseudo.push_back(diffusion::naive_baseline(*seq.annotation));

    auto diffuse_with = [&](const models::StochasticClassifier& model,
                            const std::vector<Matrix>& inputs) {
        // pre-forked rngs keep the pass deterministic however it is scheduled
        std::vector<Rng> seq_rngs;
        seq_rngs.reserve(data.size());
        for (size_t s = 0; s < data.size(); ++s) seq_rngs.push_back(rng.fork());
        for (size_t s = 0; s < data.size(); ++s) {
            ProbabilityStack stack = uncertainty::collect_probability_stack(
                model, inputs[s], dcfg.mc_passes, seq_rngs[s],
                data[s].annotation->num_classes);
            UncertaintySequence unc = uncertainty::estimate(stack);
            pseudo[s] = diffusion::temporal_diffusion(unc, *data[s].annotation, dcfg.tau,
                                                      dcfg.mode);
        }
    };

    int snapshot_index = 0;

    // spatial phase: train the per-frame classifier and re-diffuse
    std::vector<Matrix> raw_inputs;
    for (const TrainSequence& seq : data) raw_inputs.push_back(seq.features->frames);
    for (int round = 0; round < tcfg.diffusion_rounds_spatial; ++round) {
        StageLog log;
        optimize_spatial(spatial, feats, label_ptrs(pseudo), tcfg, rng, &log);
        result.stages.push_back(std::move(log));
        diffuse_with(spatial, raw_inputs);
        result.history.push_back(make_snapshot("spatial", ++snapshot_index, pseudo, data));
    }

    // loop phase: alternate the temporal model and diffusion, then refresh
    // the spatial model on the final pseudo labels
    for (int loop = 0; loop < tcfg.loop_iterations; ++loop) {
        std::vector<Matrix> embeddings(data.size());
        for (size_t s = 0; s < data.size(); ++s) {
            Matrix probs;
            spatial.forward(data[s].features->frames, probs, &embeddings[s]);
        }
        for (int round = 0; round < tcfg.diffusion_rounds_temporal; ++round) {
            StageLog log;
            optimize_temporal(temporal, embeddings, label_ptrs(pseudo), tcfg, rng, &log);
            result.stages.push_back(std::move(log));
            diffuse_with(temporal, embeddings);
            result.history.push_back(make_snapshot("temporal", ++snapshot_index, pseudo, data));
        }
        StageLog log;
        optimize_spatial(spatial, feats, label_ptrs(pseudo), tcfg, rng, &log);
        result.stages.push_back(std::move(log));
    }

    result.final_pseudo = pseudo;
    return result;
}

LabelSequence predict_sequence(const models::SpatialMlp& spatial,
                               const models::DilatedTcn& temporal,
                               const FeatureSequence& features) {
    Matrix probs, embeddings;
    spatial.forward(features.frames, probs, &embeddings);
    Matrix tprobs = models::temporal_forward(temporal, embeddings);
    LabelSequence out;
    out.sequence_id = features.sequence_id;
    out.labels.resize(features.num_frames());
    for (int t = 0; t < tprobs.rows; ++t) {
        int best = 0;
        for (int c = 1; c < tprobs.cols; ++c)
            if (tprobs.at(t, c) > tprobs.at(t, best)) best = c;
        out.labels[t] = best + 1;
    }
    return out;
}

}  // namespace uatd::training
