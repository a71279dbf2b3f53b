#pragma once

#include "uatd/core.hpp"

namespace uatd::diffusion {

// Grows pseudo labels outward from the timestamp anchors. Anchor frames
// always keep their annotated class. A non-anchor frame t can only be
// labeled with its predicted class c when u[t] < tau and c equals the class
// of the timestamp it diffuses from.
//
// contiguous: walk frame-by-frame away from each anchor and stop at the
// first frame failing either condition.
// filter: label every frame in the inter-timestamp interval that satisfies
// both conditions, regardless of gaps.
//
// Interval bounds use t_0 = 1 and t_{N+1} = T, so the first and last anchors
// diffuse to the sequence edges. Throws std::invalid_argument for tau <= 0
// (tau = +infinity is allowed) or mismatched lengths.
LabelSequence temporal_diffusion(const UncertaintySequence& unc, const AnnotationSet& ann,
                                 double tau, DiffusionMode mode);

// Only the annotated timestamp frames, everything else unlabeled.
LabelSequence naive_baseline(const AnnotationSet& ann);

// Fully labeled: the class changes at the center frame between consecutive
// timestamps (integer floor midpoint); frames before the first / after the
// last timestamp take the nearest timestamp's class.
LabelSequence uniform_baseline(const AnnotationSet& ann);

enum class TimestampPolicy { random, start, middle, end };

std::string to_string(TimestampPolicy policy);
bool parse_timestamp_policy(const std::string& s, TimestampPolicy& out);

// Draws one timestamp per phase (maximal constant run) of a fully labeled
// sequence. random draws anywhere in the phase; start/middle/end draw inside
// the first/middle/last 10% of it, with the region clamped to at least one
// frame. The result carries gt as full_labels.
AnnotationSet sample_timestamps(const LabelSequence& gt, int num_classes,
                                TimestampPolicy policy, Rng& rng);

// Masks ground truth wherever the pseudo labels are unlabeled; kept frames
// always carry the ground-truth class.
LabelSequence clean_gt_with_uatd(const LabelSequence& gt, const LabelSequence& pseudo);

// Zeroes width frames on both sides of every phase boundary; overlapping
// windows union. width = 0 returns gt unchanged.
LabelSequence mask_fixed_width(const LabelSequence& gt, int width);

}  // namespace uatd::diffusion
