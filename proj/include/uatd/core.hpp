#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace uatd {

// Row-major dense matrix of doubles. Compute happens in double; bulk file
// formats store float32 (see io).
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool all_finite() const;
    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
};

// Deterministic RNG. Draws go through hand-rolled transforms instead of
// <random> distributions so that a seed reproduces the same stream on any
// standard library.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(uint64_t seed) : gen(seed) {}

    uint64_t next() { return gen(); }

    // uniform in [0,1) with 53 random bits
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // inclusive on both ends
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
    }

    bool bernoulli(double p) { return uniform01() < p; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Independent child stream; advances this generator once.
    Rng fork() { return Rng(next() ^ 0x9e3779b97f4a7c15ULL); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = next() % i;
            std::swap(v[i - 1], v[j]);
        }
    }
};

// A video reduced to T per-frame feature vectors.
struct FeatureSequence {
    std::string sequence_id;
    Matrix frames;            // T x D
    double frame_rate = 1.0;  // frames per second

    int num_frames() const { return frames.rows; }
    int dim() const { return frames.cols; }
};

// One labelled frame: 1-indexed frame, phase class in 1..C.
struct Timestamp {
    int frame = 0;
    int label = 0;
};

// Per-frame labels; 0 = unlabeled, 1..C = phase class.
struct LabelSequence {
    std::string sequence_id;
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    // 1-indexed accessors; storage is 0-based.
    int label_at(int frame) const { return labels[static_cast<size_t>(frame) - 1]; }
    void set_label(int frame, int value) { labels[static_cast<size_t>(frame) - 1] = value; }

    bool fully_labeled() const;
    int labeled_count() const;

    bool operator==(const LabelSequence& other) const = default;
};

// Timestamp labels for one sequence, optionally with the full ground truth
// (evaluation and cleaning only).
struct AnnotationSet {
    std::string sequence_id;
    int num_frames = 0;
    int num_classes = 0;
    std::vector<Timestamp> timestamps;  // strictly increasing frames, adjacent classes distinct
    std::optional<LabelSequence> full_labels;

    int num_timestamps() const { return static_cast<int>(timestamps.size()); }
};

// K stochastic forward passes x T frames x C classes.
struct ProbabilityStack {
    int passes = 0;   // K
    int frames = 0;   // T
    int classes = 0;  // C
    std::vector<double> probs;  // K*T*C, pass-major then frame

    ProbabilityStack() = default;
    ProbabilityStack(int k, int t, int c)
        : passes(k), frames(t), classes(c),
          probs(static_cast<size_t>(k) * t * c, 0.0) {}

    double& at(int k, int t, int c) {
        return probs[(static_cast<size_t>(k) * frames + t) * classes + c];
    }
    double at(int k, int t, int c) const {
        return probs[(static_cast<size_t>(k) * frames + t) * classes + c];
    }

    // every (k,t,.) row nonnegative and summing to 1 within tol
    bool rows_normalized(double tol = 1e-5) const;
};

// Per-frame predicted class and uncertainty score.
struct UncertaintySequence {
    std::vector<int> predicted_class;  // 1..C
    std::vector<double> uncertainty;   // >= 0
    Matrix mean_probs;                 // T x C

    int num_frames() const { return static_cast<int>(predicted_class.size()); }
};

enum class DiffusionMode { contiguous, filter };

struct DiffusionConfig {
    double tau = 0.1;            // uncertainty threshold; may be +infinity
    DiffusionMode mode = DiffusionMode::contiguous;
    int mc_passes = 5;           // K
    double dropout_rate = 0.5;
};

enum class CeNormalization { sequence_length, labeled_count };

struct TrainConfig {
    int diffusion_rounds_spatial = 2;   // rounds before the first loop
    int diffusion_rounds_temporal = 4;  // n
    int loop_iterations = 2;            // m
    double lambda_smooth = 0.015;
    double gamma = 4.0;                 // smoothing truncation
    CeNormalization ce_normalization = CeNormalization::sequence_length;

    double spatial_lr = 1e-4;
    double spatial_weight_decay = 1e-5;
    int spatial_step_epochs = 2;        // step decay x0.5 every 2 epochs
    double spatial_step_decay = 0.5;
    int spatial_epochs = 5;
    int spatial_batch = 8;

    double temporal_lr = 1e-3;          // cosine annealed
    double temporal_weight_decay = 0.0;
    int temporal_epochs = 20;

    uint64_t seed = 1;
};

std::string to_string(DiffusionMode mode);
std::string to_string(CeNormalization norm);
bool parse_diffusion_mode(const std::string& s, DiffusionMode& out);
bool parse_ce_normalization(const std::string& s, CeNormalization& out);

// Checks every type invariant plus num_frames == T. Violations are returned,
// never thrown.
std::vector<std::string> validate(const AnnotationSet& annotation,
                                  const FeatureSequence& features);

// Structural checks on an annotation alone (no feature sequence at hand).
std::vector<std::string> validate_annotation(const AnnotationSet& annotation);

}  // namespace uatd
