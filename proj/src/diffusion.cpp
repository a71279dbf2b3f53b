#include "uatd/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace uatd::diffusion {

namespace {

void require_valid_annotation(const AnnotationSet& ann) {
    std::vector<std::string> v = validate_annotation(ann);
    if (!v.empty()) throw std::invalid_argument("invalid annotation: " + v.front());
}

// Maximal constant runs of a fully labeled sequence, 1-indexed inclusive.
struct Run {
    int start;
    int end;
    int label;
};

std::vector<Run> phase_runs(const LabelSequence& gt) {
    std::vector<Run> runs;
    const int t_len = gt.size();
    int start = 1;
    for (int t = 2; t <= t_len + 1; ++t) {
        if (t == t_len + 1 || gt.label_at(t) != gt.label_at(start)) {
            runs.push_back({start, t - 1, gt.label_at(start)});
            start = t;
        }
    }
    return runs;
}

}  // namespace

LabelSequence temporal_diffusion(const UncertaintySequence& unc, const AnnotationSet& ann,
                                 double tau, DiffusionMode mode) {
    require_valid_annotation(ann);
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive (or +infinity)");
    if (unc.num_frames() != ann.num_frames)
        throw std::invalid_argument("uncertainty length does not match num_frames");

    const int t_len = ann.num_frames;
    const int n = ann.num_timestamps();
    LabelSequence out;
    out.sequence_id = ann.sequence_id;
    out.labels.assign(t_len, 0);

    // anchors keep their annotated class unconditionally
    for (const Timestamp& ts : ann.timestamps) out.set_label(ts.frame, ts.label);

    auto passes = [&](int frame, int anchor_class) {
        return unc.uncertainty[frame - 1] < tau &&
               unc.predicted_class[frame - 1] == anchor_class;
    };

    for (int i = 0; i < n; ++i) {
        const int anchor = ann.timestamps[i].frame;
        const int cls = ann.timestamps[i].label;
        // open interval between neighbouring anchors; the sequence edges are
        // reachable (t_0 = 1, t_{N+1} = T)
        const int lo = (i == 0) ? 1 : ann.timestamps[i - 1].frame + 1;
        const int hi = (i == n - 1) ? t_len : ann.timestamps[i + 1].frame - 1;

        if (mode == DiffusionMode::contiguous) {
            for (int t = anchor - 1; t >= lo; --t) {
                if (!passes(t, cls)) break;
                out.set_label(t, cls);
            }
            for (int t = anchor + 1; t <= hi; ++t) {
                if (!passes(t, cls)) break;
                out.set_label(t, cls);
            }
        } else {
            for (int t = lo; t <= hi; ++t) {
                if (t == anchor) continue;
                if (passes(t, cls)) out.set_label(t, cls);
            }
        }
    }
    return out;
}

LabelSequence naive_baseline(const AnnotationSet& ann) {
    require_valid_annotation(ann);
    LabelSequence out;
    out.sequence_id = ann.sequence_id;
    out.labels.assign(ann.num_frames, 0);
    for (const Timestamp& ts : ann.timestamps) out.set_label(ts.frame, ts.label);
    return out;
}

LabelSequence uniform_baseline(const AnnotationSet& ann) {
    require_valid_annotation(ann);
    LabelSequence out;
    out.sequence_id = ann.sequence_id;
    out.labels.assign(ann.num_frames, 0);

    const auto& ts = ann.timestamps;
    const int n = ann.num_timestamps();
    for (int t = 1; t <= ts.front().frame; ++t) out.set_label(t, ts.front().label);
    for (int t = ts.back().frame; t <= ann.num_frames; ++t) out.set_label(t, ts.back().label);
    for (int i = 0; i + 1 < n; ++i) {
        const int t1 = ts[i].frame, t2 = ts[i + 1].frame;
        const int mid = t1 + (t2 - t1) / 2;  // class changes at the center frame
        for (int t = t1 + 1; t <= mid; ++t) out.set_label(t, ts[i].label);
        for (int t = mid + 1; t < t2; ++t) out.set_label(t, ts[i + 1].label);
    }
    return out;
}

std::string to_string(TimestampPolicy policy) {
    switch (policy) {
        case TimestampPolicy::random: return "random";
        case TimestampPolicy::start: return "start";
        case TimestampPolicy::middle: return "middle";
        case TimestampPolicy::end: return "end";
    }
    return "random";
}

bool parse_timestamp_policy(const std::string& s, TimestampPolicy& out) {
    if (s == "random") out = TimestampPolicy::random;
    else if (s == "start") out = TimestampPolicy::start;
    else if (s == "middle") out = TimestampPolicy::middle;
    else if (s == "end") out = TimestampPolicy::end;
    else return false;
    return true;
}

AnnotationSet sample_timestamps(const LabelSequence& gt, int num_classes,
                                TimestampPolicy policy, Rng& rng) {
    if (gt.size() < 1) throw std::invalid_argument("empty label sequence");
    if (!gt.fully_labeled()) throw std::invalid_argument("gt contains zeros");
    for (int v : gt.labels)
        if (v > num_classes) throw std::invalid_argument("gt label exceeds num_classes");

    AnnotationSet ann;
    ann.sequence_id = gt.sequence_id;
    ann.num_frames = gt.size();
    ann.num_classes = num_classes;
    ann.full_labels = gt;

    for (const Run& run : phase_runs(gt)) {
        const int len = run.end - run.start + 1;
        // 10% of the phase, clamped to at least one frame
        const int region = std::max(1, len / 10);
        int lo = run.start, hi = run.end;
        switch (policy) {
            case TimestampPolicy::random:
                break;
            case TimestampPolicy::start:
                hi = run.start + region - 1;
                break;
            case TimestampPolicy::middle:
                lo = run.start + (len - region) / 2;
                hi = lo + region - 1;
                break;
            case TimestampPolicy::end:
                lo = run.end - region + 1;
                break;
        }
        ann.timestamps.push_back({rng.uniform_int(lo, hi), run.label});
    }
    return ann;
}

LabelSequence clean_gt_with_uatd(const LabelSequence& gt, const LabelSequence& pseudo) {
    if (gt.size() != pseudo.size()) throw std::invalid_argument("length mismatch");
    if (!gt.fully_labeled()) throw std::invalid_argument("gt must be fully labeled");
    LabelSequence out = gt;
    for (int t = 1; t <= gt.size(); ++t)
        if (pseudo.label_at(t) == 0) out.set_label(t, 0);
    return out;
}

LabelSequence mask_fixed_width(const LabelSequence& gt, int width) {
    if (!gt.fully_labeled()) throw std::invalid_argument("gt must be fully labeled");
    if (width < 0) throw std::invalid_argument("width must be >= 0");
    LabelSequence out = gt;
    if (width == 0) return out;
    const int t_len = gt.size();
    for (int b = 1; b < t_len; ++b) {
        if (gt.label_at(b) == gt.label_at(b + 1)) continue;
        const int lo = std::max(1, b - width + 1);
        const int hi = std::min(t_len, b + width);
        for (int t = lo; t <= hi; ++t) out.set_label(t, 0);
    }
    return out;
}

}  // namespace uatd::diffusion
