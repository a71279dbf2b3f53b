#include "uatd/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uatd::io {

using json = nlohmann::ordered_json;

namespace {

constexpr uint16_t kFseqVersion = 1;
constexpr uint16_t kPstkVersion = 1;
constexpr uint16_t kCkptVersion = 1;

// ---- little-endian encoding, host independent ----

void put_u16(std::string& buf, uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(buf, bits);
}

void put_f64(std::string& buf, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(buf, bits);
}

struct Cursor {
    const std::string& data;
    size_t pos = 0;

    void require(size_t n) {
        if (pos + n > data.size()) throw IoError(IoCode::truncated, "unexpected end of file");
    }
    uint8_t u8() {
        require(1);
        return static_cast<uint8_t>(data[pos++]);
    }
    uint16_t u16() {
        uint16_t v = u8();
        v |= static_cast<uint16_t>(u8()) << 8;
        return v;
    }
    uint32_t u32() {
        uint32_t v = 0;
        require(4);
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
        return v;
    }
    uint64_t u64() {
        uint64_t v = 0;
        require(8);
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string bytes(size_t n) {
        require(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(IoCode::io_failure, "cannot open " + path.string() + " for writing");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw IoError(IoCode::io_failure, "write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(IoCode::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return std::move(ss).str();
}

void check_magic(Cursor& cur, const char* magic, const char* what) {
    const std::string got = cur.bytes(4);
    if (got != magic)
        throw IoError(IoCode::bad_magic, std::string("not a ") + what + " file");
}

void check_version(uint16_t got, uint16_t expected, const char* what) {
    if (got != expected) {
        std::ostringstream os;
        os << what << " version " << got << " unsupported (expected " << expected << ")";
        throw IoError(IoCode::bad_version, os.str());
    }
}

json parse_json(const std::string& text, const std::filesystem::path& path) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw IoError(IoCode::bad_json, "malformed JSON in " + path.string());
    return j;
}

FeatureSequence read_feature_csv(const std::string& text, const std::string& id) {
    std::vector<std::vector<double>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                size_t used = 0;
                double v = std::stod(cell, &used);
                row.push_back(v);
            } catch (const std::exception&) {
                throw IoError(IoCode::bad_field, "unparsable CSV value '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(IoCode::bad_field, "ragged CSV rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(IoCode::bad_field, "empty CSV feature file");

    FeatureSequence fs;
    fs.sequence_id = id;
    fs.frames = Matrix(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (size_t t = 0; t < rows.size(); ++t)
        for (size_t d = 0; d < rows[t].size(); ++d) {
            if (!std::isfinite(rows[t][d]))
                throw IoError(IoCode::nan_value, "non-finite value in features");
            fs.frames.at(static_cast<int>(t), static_cast<int>(d)) = rows[t][d];
        }
    return fs;
}

std::string stem_of(const std::filesystem::path& path) {
    std::string stem = path.stem().string();
    // strip compound suffixes like .ann.json / .labels.json
    const size_t dot = stem.rfind('.');
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    return stem;
}

}  // namespace

const char* to_string(IoCode code) {
    switch (code) {
        case IoCode::bad_magic: return "bad magic";
        case IoCode::bad_version: return "version mismatch";
        case IoCode::truncated: return "truncated payload";
        case IoCode::nan_value: return "non-finite value";
        case IoCode::bad_json: return "malformed JSON";
        case IoCode::bad_field: return "invalid field";
        case IoCode::io_failure: return "io failure";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

void write_feature_sequence(const std::filesystem::path& path, const FeatureSequence& fs) {
    if (!fs.frames.all_finite())
        throw IoError(IoCode::nan_value, "non-finite value in features");
    std::string buf;
    buf.reserve(14 + fs.frames.data.size() * 4);
    buf += "FSEQ";
    put_u16(buf, kFseqVersion);
    put_u32(buf, static_cast<uint32_t>(fs.frames.rows));
    put_u32(buf, static_cast<uint32_t>(fs.frames.cols));
    for (double v : fs.frames.data) put_f32(buf, static_cast<float>(v));
    write_file(path, buf);
}

FeatureSequence read_feature_sequence(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    if (data.size() < 4 || data.compare(0, 4, "FSEQ") != 0) {
        if (path.extension() == ".csv") return read_feature_csv(data, path.stem().string());
        throw IoError(IoCode::bad_magic, "not a feature file: " + path.string());
    }
    Cursor cur{data};
    check_magic(cur, "FSEQ", "feature");
    check_version(cur.u16(), kFseqVersion, "feature file");
    const uint32_t t_len = cur.u32();
    const uint32_t dim = cur.u32();
    if (t_len < 1 || dim < 1) throw IoError(IoCode::bad_field, "feature file with empty shape");

    FeatureSequence fs;
    fs.sequence_id = path.stem().string();
    fs.frames = Matrix(static_cast<int>(t_len), static_cast<int>(dim));
    for (double& v : fs.frames.data) {
        v = cur.f32();
        if (!std::isfinite(v)) throw IoError(IoCode::nan_value, "non-finite value in features");
    }
    return fs;
}

// ---------------------------------------------------------------------------
// probability stacks
// ---------------------------------------------------------------------------

void write_probability_stack(const std::filesystem::path& path, const ProbabilityStack& stack) {
    std::string buf;
    buf.reserve(18 + stack.probs.size() * 4);
    buf += "PSTK";
    put_u16(buf, kPstkVersion);
    put_u32(buf, static_cast<uint32_t>(stack.passes));
    put_u32(buf, static_cast<uint32_t>(stack.frames));
    put_u32(buf, static_cast<uint32_t>(stack.classes));
    for (double v : stack.probs) put_f32(buf, static_cast<float>(v));
    write_file(path, buf);
}

ProbabilityStack read_probability_stack(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    Cursor cur{data};
    check_magic(cur, "PSTK", "probability stack");
    check_version(cur.u16(), kPstkVersion, "probability stack");
    const uint32_t k = cur.u32();
    const uint32_t t = cur.u32();
    const uint32_t c = cur.u32();
    if (k < 1 || t < 1 || c < 1) throw IoError(IoCode::bad_field, "stack with empty shape");
    ProbabilityStack stack(static_cast<int>(k), static_cast<int>(t), static_cast<int>(c));
    for (double& v : stack.probs) {
        v = cur.f32();
        if (!std::isfinite(v)) throw IoError(IoCode::nan_value, "non-finite probability");
    }
    return stack;
}

// ---------------------------------------------------------------------------
// annotations and labels
// ---------------------------------------------------------------------------

void write_annotation(const std::filesystem::path& path, const AnnotationSet& ann) {
    json j;
    j["sequence_id"] = ann.sequence_id;
    j["num_frames"] = ann.num_frames;
    j["num_classes"] = ann.num_classes;
    json ts = json::array();
    for (const Timestamp& t : ann.timestamps) ts.push_back({{"frame", t.frame}, {"class", t.label}});
    j["timestamps"] = std::move(ts);
    if (ann.full_labels.has_value()) j["full_labels"] = ann.full_labels->labels;
    write_file(path, j.dump(2) + "\n");
}

AnnotationSet read_annotation(const std::filesystem::path& path) {
    const json j = parse_json(read_file(path), path);
    AnnotationSet ann;
    try {
        ann.sequence_id = j.at("sequence_id").get<std::string>();
        ann.num_frames = j.at("num_frames").get<int>();
        ann.num_classes = j.at("num_classes").get<int>();
        for (const json& t : j.at("timestamps"))
            ann.timestamps.push_back({t.at("frame").get<int>(), t.at("class").get<int>()});
        if (j.contains("full_labels")) {
            LabelSequence fl;
            fl.sequence_id = ann.sequence_id;
            fl.labels = j.at("full_labels").get<std::vector<int>>();
            ann.full_labels = std::move(fl);
        }
    } catch (const json::exception& e) {
        throw IoError(IoCode::bad_field, std::string(e.what()) + " in " + path.string());
    }
    const std::vector<std::string> violations = validate_annotation(ann);
    if (!violations.empty())
        throw IoError(IoCode::bad_field, violations.front() + " in " + path.string());
    return ann;
}

void write_labels(const std::filesystem::path& path, const LabelSequence& labels) {
    json j;
    j["sequence_id"] = labels.sequence_id;
    j["labels"] = labels.labels;
    write_file(path, j.dump(2) + "\n");
}

LabelSequence read_labels(const std::filesystem::path& path) {
    const json j = parse_json(read_file(path), path);
    LabelSequence out;
    try {
        out.sequence_id = j.at("sequence_id").get<std::string>();
        out.labels = j.at("labels").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw IoError(IoCode::bad_field, std::string(e.what()) + " in " + path.string());
    }
    for (int v : out.labels)
        if (v < 0) throw IoError(IoCode::bad_field, "negative label in " + path.string());
    return out;
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {

void put_array(std::string& buf, const std::string& name, const std::vector<double>& values) {
    put_u16(buf, static_cast<uint16_t>(name.size()));
    buf += name;
    put_u32(buf, static_cast<uint32_t>(values.size()));
    for (double v : values) put_f64(buf, v);
}

using ArrayMap = std::vector<std::pair<std::string, std::vector<double>>>;

std::string encode_checkpoint(const json& manifest, const ArrayMap& arrays) {
    std::string buf;
    buf += "UCKP";
    put_u16(buf, kCkptVersion);
    const std::string mtext = manifest.dump();
    put_u32(buf, static_cast<uint32_t>(mtext.size()));
    buf += mtext;
    put_u32(buf, static_cast<uint32_t>(arrays.size()));
    for (const auto& [name, values] : arrays) put_array(buf, name, values);
    return buf;
}

std::pair<json, ArrayMap> decode_checkpoint(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    Cursor cur{data};
    check_magic(cur, "UCKP", "checkpoint");
    check_version(cur.u16(), kCkptVersion, "checkpoint");
    const uint32_t mlen = cur.u32();
    const json manifest = parse_json(cur.bytes(mlen), path);
    const uint32_t count = cur.u32();
    ArrayMap arrays;
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t nlen = cur.u16();
        std::string name = cur.bytes(nlen);
        const uint32_t elems = cur.u32();
        std::vector<double> values(elems);
        for (double& v : values) v = cur.f64();
        arrays.emplace_back(std::move(name), std::move(values));
    }
    return {manifest, arrays};
}

const std::vector<double>& find_array(const ArrayMap& arrays, const std::string& name,
                                      size_t expected, const std::filesystem::path& path) {
    for (const auto& [n, values] : arrays) {
        if (n == name) {
            if (values.size() != expected)
                throw IoError(IoCode::bad_field,
                              "array " + name + " has wrong size in " + path.string());
            return values;
        }
    }
    throw IoError(IoCode::bad_field, "missing array " + name + " in " + path.string());
}

}  // namespace

void save_spatial_checkpoint(const std::filesystem::path& path, const models::SpatialMlp& model) {
    json manifest;
    manifest["kind"] = "spatial_mlp";
    manifest["input_dim"] = model.cfg.input_dim;
    manifest["hidden_dim"] = model.cfg.hidden_dim;
    manifest["num_classes"] = model.cfg.num_classes;
    manifest["dropout_rate"] = model.cfg.dropout_rate;
    ArrayMap arrays = {{"w1", model.w1.data},
                       {"b1", model.b1},
                       {"w2", model.w2.data},
                       {"b2", model.b2}};
    write_file(path, encode_checkpoint(manifest, arrays));
}

models::SpatialMlp load_spatial_checkpoint(const std::filesystem::path& path) {
    auto [manifest, arrays] = decode_checkpoint(path);
    models::SpatialMlp model;
    try {
        if (manifest.at("kind").get<std::string>() != "spatial_mlp")
            throw IoError(IoCode::bad_field, "checkpoint kind mismatch in " + path.string());
        model.cfg.input_dim = manifest.at("input_dim").get<int>();
        model.cfg.hidden_dim = manifest.at("hidden_dim").get<int>();
        model.cfg.num_classes = manifest.at("num_classes").get<int>();
        model.cfg.dropout_rate = manifest.at("dropout_rate").get<double>();
    } catch (const json::exception& e) {
        throw IoError(IoCode::bad_field, std::string(e.what()) + " in " + path.string());
    }
    const size_t h = model.cfg.hidden_dim, d = model.cfg.input_dim, c = model.cfg.num_classes;
    model.w1 = Matrix(static_cast<int>(h), static_cast<int>(d));
    model.w1.data = find_array(arrays, "w1", h * d, path);
    model.b1 = find_array(arrays, "b1", h, path);
    model.w2 = Matrix(static_cast<int>(c), static_cast<int>(h));
    model.w2.data = find_array(arrays, "w2", c * h, path);
    model.b2 = find_array(arrays, "b2", c, path);
    return model;
}

void save_temporal_checkpoint(const std::filesystem::path& path, const models::DilatedTcn& model) {
    json manifest;
    manifest["kind"] = "dilated_tcn";
    manifest["input_dim"] = model.cfg.input_dim;
    manifest["channels"] = model.cfg.channels;
    manifest["layers"] = model.cfg.layers;
    manifest["num_classes"] = model.cfg.num_classes;
    manifest["dropout_rate"] = model.cfg.dropout_rate;
    manifest["causal"] = model.cfg.causal;
    ArrayMap arrays;
    arrays.emplace_back("in_w", model.in_w.data);
    arrays.emplace_back("in_b", model.in_b);
    for (size_t l = 0; l < model.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        arrays.emplace_back(prefix + "conv_w", model.layers[l].conv_w.data);
        arrays.emplace_back(prefix + "conv_b", model.layers[l].conv_b);
        arrays.emplace_back(prefix + "proj_w", model.layers[l].proj_w.data);
        arrays.emplace_back(prefix + "proj_b", model.layers[l].proj_b);
    }
    arrays.emplace_back("head_w", model.head_w.data);
    arrays.emplace_back("head_b", model.head_b);
    write_file(path, encode_checkpoint(manifest, arrays));
}

models::DilatedTcn load_temporal_checkpoint(const std::filesystem::path& path) {
    auto [manifest, arrays] = decode_checkpoint(path);
    models::DilatedTcn model;
    try {
        if (manifest.at("kind").get<std::string>() != "dilated_tcn")
            throw IoError(IoCode::bad_field, "checkpoint kind mismatch in " + path.string());
        model.cfg.input_dim = manifest.at("input_dim").get<int>();
        model.cfg.channels = manifest.at("channels").get<int>();
        model.cfg.layers = manifest.at("layers").get<int>();
        model.cfg.num_classes = manifest.at("num_classes").get<int>();
        model.cfg.dropout_rate = manifest.at("dropout_rate").get<double>();
        model.cfg.causal = manifest.at("causal").get<bool>();
    } catch (const json::exception& e) {
        throw IoError(IoCode::bad_field, std::string(e.what()) + " in " + path.string());
    }
    const size_t ch = model.cfg.channels, d = model.cfg.input_dim, c = model.cfg.num_classes;
    model.in_w = Matrix(static_cast<int>(ch), static_cast<int>(d));
    model.in_w.data = find_array(arrays, "in_w", ch * d, path);
    model.in_b = find_array(arrays, "in_b", ch, path);
    model.layers.resize(model.cfg.layers);
    for (int l = 0; l < model.cfg.layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        models::DilatedTcn::Layer& layer = model.layers[l];
        layer.conv_w = Matrix(static_cast<int>(ch), static_cast<int>(3 * ch));
        layer.conv_w.data = find_array(arrays, prefix + "conv_w", ch * 3 * ch, path);
        layer.conv_b = find_array(arrays, prefix + "conv_b", ch, path);
        layer.proj_w = Matrix(static_cast<int>(ch), static_cast<int>(ch));
        layer.proj_w.data = find_array(arrays, prefix + "proj_w", ch * ch, path);
        layer.proj_b = find_array(arrays, prefix + "proj_b", ch, path);
    }
    model.head_w = Matrix(static_cast<int>(c), static_cast<int>(ch));
    model.head_w.data = find_array(arrays, "head_w", c * ch, path);
    model.head_b = find_array(arrays, "head_b", c, path);
    return model;
}

// ---------------------------------------------------------------------------
// reports and plot data
// ---------------------------------------------------------------------------

void write_metrics_report(const std::filesystem::path& path,
                          const metrics::PhaseMetricsReport& report,
                          const ConfigEcho& config, const Provenance& prov) {
    json j;
    j["averaging"] = metrics::to_string(report.averaging);
    j["overall_accuracy"] = report.overall_accuracy;
    json per_class = json::array();
    for (const metrics::ClassMetrics& cm : report.per_class) {
        json c;
        c["class"] = cm.label;
        c["present"] = cm.present;
        c["precision"] = cm.precision;
        c["recall"] = cm.recall;
        c["jaccard"] = cm.jaccard;
        c["accuracy"] = cm.accuracy;
        per_class.push_back(std::move(c));
    }
    j["per_class"] = std::move(per_class);
    j["means"] = {{"precision", report.precision.mean},
                  {"recall", report.recall.mean},
                  {"jaccard", report.jaccard.mean},
                  {"accuracy", report.class_accuracy.mean}};
    j["stds"] = {{"precision", report.precision.stddev},
                 {"recall", report.recall.stddev},
                 {"jaccard", report.jaccard.stddev},
                 {"accuracy", report.class_accuracy.stddev}};
    j["notes"] = "per-class accuracy is recall-style (share of the class's ground-truth frames "
                 "predicted correctly); overall_accuracy is the single frame-accuracy number; "
                 "classes absent from both pred and gt are excluded from means";
    json cfg = json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    j["config"] = std::move(cfg);
    j["provenance"] = {{"seed", prov.seed}, {"revision", prov.revision}};
    write_file(path, j.dump(2) + "\n");
}

void write_matrix_tsv(const std::filesystem::path& path, const Matrix& m) {
    std::ostringstream os;
    os.precision(9);
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            if (c) os << '\t';
            os << m.at(r, c);
        }
        os << '\n';
    }
    write_file(path, os.str());
}

void write_histogram_tsv(const std::filesystem::path& path,
                         const metrics::PositionHistogram& hist) {
    std::ostringstream os;
    os.precision(9);
    os << "bin_low\tbin_high\tpercent\n";
    for (int b = 0; b < 10; ++b)
        os << (b / 10.0) << '\t' << ((b + 1) / 10.0) << '\t' << hist.percent[b] << '\n';
    write_file(path, os.str());
}

}  // namespace uatd::io
