#pragma once

#include "uatd/core.hpp"

#include <string>
#include <vector>

namespace uatd::synthetic {

// Desk-scale surrogate for phase-structured videos. Each video is a chain of
// phases (no immediate class repeats); frame features are the phase's class
// centroid plus Gaussian noise, except inside the ambiguity band around each
// boundary where they linearly interpolate between the adjacent centroids.
struct SyntheticSpec {
    int num_videos = 20;
    int num_classes = 5;       // C, centroids pairwise class_separation apart
    int t_min = 150;
    int t_max = 250;
    int feature_dim = 16;      // requires num_classes <= feature_dim
    int phase_len_min = 20;    // must be >= 2*ambiguity_width + 1
    int phase_len_max = 40;
    double class_separation = 4.0;
    int ambiguity_width = 5;   // frames on each side of a boundary
    double noise_sigma = 1.0;
};

struct SyntheticVideo {
    FeatureSequence features;
    AnnotationSet annotation;  // random timestamps, full_labels attached
};

// Deterministic in (seed, spec). Throws std::invalid_argument on an
// infeasible spec.
std::vector<SyntheticVideo> generate(uint64_t seed, const SyntheticSpec& spec,
                                     const std::string& id_prefix = "v");

}  // namespace uatd::synthetic
