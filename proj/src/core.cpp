#include "uatd/core.hpp"

#include <cmath>
#include <sstream>

namespace uatd {

bool Matrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool LabelSequence::fully_labeled() const {
    for (int v : labels) {
        if (v == 0) return false;
    }
    return !labels.empty();
}

int LabelSequence::labeled_count() const {
    int n = 0;
    for (int v : labels) {
        if (v != 0) ++n;
    }
    return n;
}

bool ProbabilityStack::rows_normalized(double tol) const {
    for (int k = 0; k < passes; ++k) {
        for (int t = 0; t < frames; ++t) {
            double sum = 0.0;
            for (int c = 0; c < classes; ++c) {
                double p = at(k, t, c);
                if (p < 0.0) return false;
                sum += p;
            }
            if (std::abs(sum - 1.0) > tol) return false;
        }
    }
    return true;
}

std::string to_string(DiffusionMode mode) {
    return mode == DiffusionMode::contiguous ? "contiguous" : "filter";
}

std::string to_string(CeNormalization norm) {
    return norm == CeNormalization::sequence_length ? "sequence_length" : "labeled_count";
}

bool parse_diffusion_mode(const std::string& s, DiffusionMode& out) {
    if (s == "contiguous") {
        out = DiffusionMode::contiguous;
        return true;
    }
    if (s == "filter") {
        out = DiffusionMode::filter;
        return true;
    }
    return false;
}

bool parse_ce_normalization(const std::string& s, CeNormalization& out) {
    if (s == "sequence_length") {
        out = CeNormalization::sequence_length;
        return true;
    }
    if (s == "labeled_count") {
        out = CeNormalization::labeled_count;
        return true;
    }
    return false;
}

std::vector<std::string> validate_annotation(const AnnotationSet& ann) {
    std::vector<std::string> v;
    if (ann.num_frames < 1) v.push_back("num_frames must be >= 1");
    if (ann.num_classes < 1) v.push_back("num_classes must be >= 1");
    if (ann.timestamps.empty()) v.push_back("at least one timestamp required");
    if (static_cast<int>(ann.timestamps.size()) > ann.num_frames)
        v.push_back("more timestamps than frames");

    for (size_t i = 0; i < ann.timestamps.size(); ++i) {
        const Timestamp& ts = ann.timestamps[i];
        std::ostringstream os;
        if (ts.frame < 1 || ts.frame > ann.num_frames) {
            os << "timestamp frame " << ts.frame << " outside 1.." << ann.num_frames;
            v.push_back(os.str());
        } else if (ts.label < 1 || ts.label > ann.num_classes) {
            os << "timestamp class " << ts.label << " at frame " << ts.frame
               << " outside 1.." << ann.num_classes;
            v.push_back(os.str());
        }
        if (i > 0) {
            if (ann.timestamps[i - 1].frame >= ts.frame)
                v.push_back("timestamps not increasing");
            else if (ann.timestamps[i - 1].label == ts.label)
                v.push_back("adjacent timestamps share a class");
        }
    }

    if (ann.full_labels.has_value()) {
        const LabelSequence& fl = *ann.full_labels;
        if (fl.size() != ann.num_frames)
            v.push_back("full_labels length mismatch");
        for (int lab : fl.labels) {
            if (lab < 0 || lab > ann.num_classes) {
                v.push_back("full_labels value outside 0..C");
                break;
            }
        }
    }
    return v;
}

std::vector<std::string> validate(const AnnotationSet& ann, const FeatureSequence& features) {
    std::vector<std::string> v = validate_annotation(ann);
    if (ann.sequence_id != features.sequence_id)
        v.push_back("sequence_id mismatch");
    if (features.num_frames() < 1) v.push_back("feature sequence must have T >= 1");
    if (features.dim() < 1) v.push_back("feature dimension must be >= 1");
    if (ann.num_frames != features.num_frames())
        v.push_back("length mismatch");
    if (!features.frames.all_finite())
        v.push_back("non-finite feature value");
    return v;
}

}  // namespace uatd
