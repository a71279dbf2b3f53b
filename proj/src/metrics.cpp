#include "uatd/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace uatd::metrics {

namespace {

struct Confusion {
    long tp = 0, fp = 0, fn = 0;
    bool seen = false;
};

double ratio(long num, long den) { return den > 0 ? static_cast<double>(num) / den : 0.0; }

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / values.size();
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / values.size());
    return s;
}

void check_pair(const LabelSequence& p, const LabelSequence& g) {
    if (p.size() != g.size()) throw std::invalid_argument("pred/gt length mismatch");
    if (!g.fully_labeled()) throw std::invalid_argument("gt must be fully labeled");
}

}  // namespace

std::string to_string(Averaging averaging) {
    return averaging == Averaging::pooled ? "pooled" : "per_video";
}

bool parse_averaging(const std::string& s, Averaging& out) {
    if (s == "pooled") out = Averaging::pooled;
    else if (s == "per_video" || s == "per-video") out = Averaging::per_video;
    else return false;
    return true;
}

PhaseMetricsReport phase_metrics(const std::vector<const LabelSequence*>& pred,
                                 const std::vector<const LabelSequence*>& gt,
                                 int num_classes, Averaging averaging) {
    if (pred.size() != gt.size() || pred.empty())
        throw std::invalid_argument("pred/gt sequence counts differ or are empty");
    if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");

    PhaseMetricsReport report;
    report.averaging = averaging;
    report.per_class.resize(num_classes);
    for (int c = 0; c < num_classes; ++c) report.per_class[c].label = c + 1;

    long correct = 0, total = 0;
    double per_video_acc_sum = 0.0;

    // per class: either pooled counts or per-video metric values
    std::vector<Confusion> pooled(num_classes);
    std::vector<std::vector<double>> pv_precision(num_classes), pv_recall(num_classes),
        pv_jaccard(num_classes);

    for (size_t s = 0; s < pred.size(); ++s) {
        check_pair(*pred[s], *gt[s]);
        std::vector<Confusion> video(num_classes);
        long vid_correct = 0;
        for (int t = 1; t <= gt[s]->size(); ++t) {
            const int g = gt[s]->label_at(t);
            const int p = pred[s]->label_at(t);
            if (g < 1 || g > num_classes || p < 0 || p > num_classes)
                throw std::invalid_argument("label outside 0..num_classes");
            if (p == g) {
                ++vid_correct;
                video[g - 1].tp++;
            } else {
                video[g - 1].fn++;
                if (p != 0) video[p - 1].fp++;
            }
            video[g - 1].seen = true;
            if (p != 0) video[p - 1].seen = true;
        }
        correct += vid_correct;
        total += gt[s]->size();
        per_video_acc_sum += ratio(vid_correct, gt[s]->size());

        for (int c = 0; c < num_classes; ++c) {
            if (!video[c].seen) continue;
            pooled[c].tp += video[c].tp;
            pooled[c].fp += video[c].fp;
            pooled[c].fn += video[c].fn;
            pooled[c].seen = true;
            pv_precision[c].push_back(ratio(video[c].tp, video[c].tp + video[c].fp));
            pv_recall[c].push_back(ratio(video[c].tp, video[c].tp + video[c].fn));
            pv_jaccard[c].push_back(ratio(video[c].tp, video[c].tp + video[c].fp + video[c].fn));
        }
    }

    report.overall_accuracy = averaging == Averaging::pooled
                                  ? ratio(correct, total)
                                  : per_video_acc_sum / pred.size();

    std::vector<double> precisions, recalls, jaccards;
    for (int c = 0; c < num_classes; ++c) {
        ClassMetrics& cm = report.per_class[c];
        cm.present = pooled[c].seen;
        if (!cm.present) continue;
        if (averaging == Averaging::pooled) {
            cm.precision = ratio(pooled[c].tp, pooled[c].tp + pooled[c].fp);
            cm.recall = ratio(pooled[c].tp, pooled[c].tp + pooled[c].fn);
            cm.jaccard = ratio(pooled[c].tp, pooled[c].tp + pooled[c].fp + pooled[c].fn);
        } else {
            cm.precision = summarize(pv_precision[c]).mean;
            cm.recall = summarize(pv_recall[c]).mean;
            cm.jaccard = summarize(pv_jaccard[c]).mean;
        }
        cm.accuracy = cm.recall;
        precisions.push_back(cm.precision);
        recalls.push_back(cm.recall);
        jaccards.push_back(cm.jaccard);
    }
    report.precision = summarize(precisions);
    report.recall = summarize(recalls);
    report.jaccard = summarize(jaccards);
    report.class_accuracy = report.recall;
    return report;
}

LabelQuality pseudo_label_quality(const std::vector<const LabelSequence*>& pseudo,
                                  const std::vector<const LabelSequence*>& gt) {
    if (pseudo.size() != gt.size() || pseudo.empty())
        throw std::invalid_argument("pseudo/gt sequence counts differ or are empty");
    long total = 0, labeled = 0, matching = 0;
    for (size_t s = 0; s < pseudo.size(); ++s) {
        check_pair(*pseudo[s], *gt[s]);
        total += pseudo[s]->size();
        for (int t = 1; t <= pseudo[s]->size(); ++t) {
            const int y = pseudo[s]->label_at(t);
            if (y == 0) continue;
            ++labeled;
            if (y == gt[s]->label_at(t)) ++matching;
        }
    }
    LabelQuality q;
    q.rate = ratio(labeled, total);
    q.accuracy = labeled > 0 ? ratio(matching, labeled) : 1.0;
    return q;
}

LabelQuality pseudo_label_quality(const LabelSequence& pseudo, const LabelSequence& gt) {
    return pseudo_label_quality(std::vector<const LabelSequence*>{&pseudo},
                                std::vector<const LabelSequence*>{&gt});
}

Matrix similarity_matrix(const Matrix& embeddings) {
    const int t_len = embeddings.rows, dim = embeddings.cols;
    std::vector<double> norms(t_len);
    for (int t = 0; t < t_len; ++t) {
        double sq = 0.0;
        const double* r = embeddings.row(t);
        for (int d = 0; d < dim; ++d) sq += r[d] * r[d];
        norms[t] = std::sqrt(sq);
    }
    Matrix sim(t_len, t_len);
    #pragma omp parallel for schedule(static)
    for (int i = 0; i < t_len; ++i) {
        for (int j = i; j < t_len; ++j) {
            double value = 0.0;
            if (norms[i] > 0.0 && norms[j] > 0.0) {
                double dot = 0.0;
                const double* a = embeddings.row(i);
                const double* b = embeddings.row(j);
                for (int d = 0; d < dim; ++d) dot += a[d] * b[d];
                value = i == j ? 1.0 : dot / (norms[i] * norms[j]);
            }
            sim.at(i, j) = value;
            sim.at(j, i) = value;
        }
    }
    return sim;
}

PositionHistogram annotation_position_stats(const std::vector<const AnnotationSet*>& annotations) {
    PositionHistogram hist;
    std::array<long, 10> counts{};
    for (const AnnotationSet* ann : annotations) {
        if (!ann->full_labels.has_value())
            throw std::invalid_argument("annotation " + ann->sequence_id + " has no full labels");
        const LabelSequence& gt = *ann->full_labels;
        for (const Timestamp& ts : ann->timestamps) {
            int start = ts.frame, end = ts.frame;
            while (start > 1 && gt.label_at(start - 1) == gt.label_at(ts.frame)) --start;
            while (end < gt.size() && gt.label_at(end + 1) == gt.label_at(ts.frame)) ++end;
            const int len = end - start + 1;
            const double rel = (ts.frame - start + 0.5) / len;  // in (0, 1]
            int bin = static_cast<int>(std::ceil(rel * 10.0)) - 1;
            bin = std::min(9, std::max(0, bin));
            ++counts[bin];
            ++hist.total_timestamps;
        }
    }
    if (hist.total_timestamps > 0)
        for (int b = 0; b < 10; ++b)
            hist.percent[b] = 100.0 * counts[b] / hist.total_timestamps;
    return hist;
}

double frame_accuracy(const std::vector<const LabelSequence*>& pred,
                      const std::vector<const LabelSequence*>& gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw std::invalid_argument("pred/gt sequence counts differ or are empty");
    long correct = 0, total = 0;
    for (size_t s = 0; s < pred.size(); ++s) {
        check_pair(*pred[s], *gt[s]);
        total += gt[s]->size();
        for (int t = 1; t <= gt[s]->size(); ++t)
            if (pred[s]->label_at(t) == gt[s]->label_at(t)) ++correct;
    }
    return ratio(correct, total);
}

}  // namespace uatd::metrics
