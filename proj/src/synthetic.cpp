#include "uatd/synthetic.hpp"

#include "uatd/diffusion.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace uatd::synthetic {

namespace {

void check_spec(const SyntheticSpec& spec) {
    if (spec.num_videos < 1) throw std::invalid_argument("num_videos must be >= 1");
    if (spec.num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    if (spec.num_classes > spec.feature_dim)
        throw std::invalid_argument("centroid layout needs num_classes <= feature_dim");
    if (spec.t_min < 1 || spec.t_min > spec.t_max)
        throw std::invalid_argument("bad t_min/t_max");
    if (spec.phase_len_min < 1 || spec.phase_len_min > spec.phase_len_max)
        throw std::invalid_argument("bad phase length range");
    if (spec.ambiguity_width < 0) throw std::invalid_argument("ambiguity_width must be >= 0");
    if (spec.phase_len_min < 2 * spec.ambiguity_width + 1)
        throw std::invalid_argument("phase_len_min must be >= 2*ambiguity_width + 1");
    if (spec.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    if (!(spec.class_separation > 0.0))
        throw std::invalid_argument("class_separation must be positive");
    if (spec.t_min < spec.phase_len_min)
        throw std::invalid_argument("t_min shorter than the minimum phase length");
}

// Phase lengths summing exactly to total, each within [len_min, len_max].
std::vector<int> draw_phase_lengths(int total, int len_min, int len_max, Rng& rng) {
    const int n_min = (total + len_max - 1) / len_max;
    const int n_max = total / len_min;
    if (n_min > n_max)
        throw std::invalid_argument("no phase count fits T with the given length range");
    const int n = rng.uniform_int(n_min, n_max);
    std::vector<int> lengths(n, len_min);
    int extra = total - n * len_min;
    while (extra > 0) {
        const int idx = rng.uniform_int(0, n - 1);
        if (lengths[idx] < len_max) {
            ++lengths[idx];
            --extra;
        }
    }
    return lengths;
}

}  // namespace

std::vector<SyntheticVideo> generate(uint64_t seed, const SyntheticSpec& spec,
                                     const std::string& id_prefix) {
    check_spec(spec);
    Rng rng(seed);

    // centroids along scaled unit axes: pairwise distance is exactly
    // class_separation
    Matrix centroids(spec.num_classes, spec.feature_dim, 0.0);
    const double scale = spec.class_separation / std::sqrt(2.0);
    for (int c = 0; c < spec.num_classes; ++c) centroids.at(c, c) = scale;

    std::vector<SyntheticVideo> videos;
    videos.reserve(spec.num_videos);

    for (int v = 0; v < spec.num_videos; ++v) {
        char idbuf[64];
        std::snprintf(idbuf, sizeof(idbuf), "%s%03d", id_prefix.c_str(), v + 1);
        const std::string id(idbuf);

        const int t_len = rng.uniform_int(spec.t_min, spec.t_max);
        const std::vector<int> lengths =
            draw_phase_lengths(t_len, spec.phase_len_min, spec.phase_len_max, rng);

        // class chain without immediate repeats
        std::vector<int> phase_class(lengths.size());
        phase_class[0] = rng.uniform_int(1, spec.num_classes);
        for (size_t p = 1; p < lengths.size(); ++p) {
            int c = rng.uniform_int(1, spec.num_classes - 1);
            if (c >= phase_class[p - 1]) ++c;
            phase_class[p] = c;
        }

        LabelSequence gt;
        gt.sequence_id = id;
        gt.labels.reserve(t_len);
        for (size_t p = 0; p < lengths.size(); ++p)
            gt.labels.insert(gt.labels.end(), lengths[p], phase_class[p]);

        // clean per-frame vectors: own centroid, blended inside the bands
        Matrix clean(t_len, spec.feature_dim);
        for (int t = 0; t < t_len; ++t) {
            const double* c = centroids.row(gt.labels[t] - 1);
            std::copy(c, c + spec.feature_dim, clean.row(t));
        }
        const int a = spec.ambiguity_width;
        if (a > 0) {
            int boundary = 0;  // 0-based index of each phase's last frame
            for (size_t p = 0; p + 1 < lengths.size(); ++p) {
                boundary += lengths[p];
                const double* left = centroids.row(phase_class[p] - 1);
                const double* right = centroids.row(phase_class[p + 1] - 1);
                for (int j = boundary - a; j < boundary + a; ++j) {
                    const double alpha = (j - (boundary - a) + 0.5) / (2.0 * a);
                    double* row = clean.row(j);
                    for (int d = 0; d < spec.feature_dim; ++d)
                        row[d] = (1.0 - alpha) * left[d] + alpha * right[d];
                }
            }
        }

        FeatureSequence fs;
        fs.sequence_id = id;
        fs.frame_rate = 1.0;
        fs.frames = Matrix(t_len, spec.feature_dim);
        for (int t = 0; t < t_len; ++t)
            for (int d = 0; d < spec.feature_dim; ++d)
                fs.frames.at(t, d) = clean.at(t, d) + rng.normal(0.0, spec.noise_sigma);

        AnnotationSet ann = diffusion::sample_timestamps(
            gt, spec.num_classes, diffusion::TimestampPolicy::random, rng);

        videos.push_back({std::move(fs), std::move(ann)});
    }
    return videos;
}

}  // namespace uatd::synthetic
