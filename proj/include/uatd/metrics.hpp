#pragma once

#include "uatd/core.hpp"

#include <array>
#include <vector>

namespace uatd::metrics {

enum class Averaging { pooled, per_video };

std::string to_string(Averaging averaging);
bool parse_averaging(const std::string& s, Averaging& out);

struct ClassMetrics {
    int label = 0;
    bool present = false;  // class occurs in gt or pred; absent classes are excluded from means
    double precision = 0.0;
    double recall = 0.0;
    double jaccard = 0.0;
    double accuracy = 0.0;  // recall-style: share of the class's gt frames predicted correctly
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population std over present classes
};

struct PhaseMetricsReport {
    Averaging averaging = Averaging::pooled;
    double overall_accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    MetricSummary precision, recall, jaccard, class_accuracy;
};

// Frame-wise precision / recall / Jaccard per class plus overall accuracy.
// pooled sums the confusion counts over all videos; per_video computes the
// metrics per video first and averages over the videos where the class
// occurs. gt must be fully labeled.
PhaseMetricsReport phase_metrics(const std::vector<const LabelSequence*>& pred,
                                 const std::vector<const LabelSequence*>& gt,
                                 int num_classes, Averaging averaging);

struct LabelQuality {
    double rate = 0.0;      // labeled frames / all frames
    double accuracy = 0.0;  // labeled frames matching gt / labeled frames (1 when none labeled)
};

LabelQuality pseudo_label_quality(const std::vector<const LabelSequence*>& pseudo,
                                  const std::vector<const LabelSequence*>& gt);

LabelQuality pseudo_label_quality(const LabelSequence& pseudo, const LabelSequence& gt);

// T x T cosine similarities between frame embeddings; pairs involving a
// zero-norm row are 0.
Matrix similarity_matrix(const Matrix& embeddings);

// Relative timestamp positions inside their phases, binned into
// (0,0.1], (0.1,0.2], ..., (0.9,1.0]. Percentages sum to 100. A timestamp at
// frame t of a phase [start, start+len) sits at (t - start + 0.5) / len, so
// the middle frame of an odd-length phase lands in (0.4,0.5].
struct PositionHistogram {
    std::array<double, 10> percent{};
    long total_timestamps = 0;
};

PositionHistogram annotation_position_stats(const std::vector<const AnnotationSet*>& annotations);

// Plain frame accuracy of pred against a fully labeled gt.
double frame_accuracy(const std::vector<const LabelSequence*>& pred,
                      const std::vector<const LabelSequence*>& gt);

}  // namespace uatd::metrics
