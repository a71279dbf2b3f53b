#pragma once

#include "uatd/core.hpp"
#include "uatd/metrics.hpp"
#include "uatd/models.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uatd::io {

enum class IoCode {
    bad_magic,
    bad_version,
    truncated,
    nan_value,
    bad_json,
    bad_field,
    io_failure,
};

const char* to_string(IoCode code);

class IoError : public std::runtime_error {
public:
    IoError(IoCode code, const std::string& msg)
        : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}
    IoCode code() const { return code_; }

private:
    IoCode code_;
};

// All binary formats are little-endian regardless of host and carry a magic
// plus a version; a version mismatch is refused with bad_version.
//
//   feature file:      "FSEQ" v1 | T u32 | D u32 | T*D f32 row-major
//   probability stack: "PSTK" v1 | K u32 | T u32 | C u32 | K*T*C f32
//   checkpoint:        "UCKP" v1 | manifest-JSON len u32 + bytes |
//                      array count u32 | per array: name (u16 len + bytes),
//                      element count u32, f64 data
//
// Feature reads also accept CSV (one frame per row, comma separated); the
// sequence_id of binary/CSV reads is the file stem.

void write_feature_sequence(const std::filesystem::path& path, const FeatureSequence& fs);
FeatureSequence read_feature_sequence(const std::filesystem::path& path);

void write_probability_stack(const std::filesystem::path& path, const ProbabilityStack& stack);
ProbabilityStack read_probability_stack(const std::filesystem::path& path);

// JSON: {"sequence_id", "num_frames", "num_classes",
//        "timestamps": [{"frame", "class"}...], "full_labels": [...]?}
void write_annotation(const std::filesystem::path& path, const AnnotationSet& ann);
AnnotationSet read_annotation(const std::filesystem::path& path);

// JSON: {"sequence_id", "labels": [...]} with 0 = unlabeled
void write_labels(const std::filesystem::path& path, const LabelSequence& labels);
LabelSequence read_labels(const std::filesystem::path& path);

void save_spatial_checkpoint(const std::filesystem::path& path, const models::SpatialMlp& model);
models::SpatialMlp load_spatial_checkpoint(const std::filesystem::path& path);
void save_temporal_checkpoint(const std::filesystem::path& path, const models::DilatedTcn& model);
models::DilatedTcn load_temporal_checkpoint(const std::filesystem::path& path);

struct Provenance {
    uint64_t seed = 0;
    std::string revision = "unknown";
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

void write_metrics_report(const std::filesystem::path& path,
                          const metrics::PhaseMetricsReport& report,
                          const ConfigEcho& config, const Provenance& prov);

// Plot-data exports: plain delimited text.
void write_matrix_tsv(const std::filesystem::path& path, const Matrix& m);
void write_histogram_tsv(const std::filesystem::path& path,
                         const metrics::PositionHistogram& hist);

}  // namespace uatd::io
