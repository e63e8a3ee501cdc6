#include "colar/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "colar/errors.hpp"

namespace colar {

namespace {

constexpr char kFeatureMagic[4] = {'C', 'L', 'R', 'F'};
constexpr uint32_t kFeatureVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::ifstream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

// Frames are rows on disk (L x D float32), columns in memory (D x L double).
void write_feature_file(const std::filesystem::path& path, const FeatureSequence& seq) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open feature file for writing: " + path.string());
    out.write(kFeatureMagic, 4);
    write_u32(out, kFeatureVersion);
    write_u32(out, static_cast<uint32_t>(seq.dim));
    write_u32(out, static_cast<uint32_t>(seq.length()));
    for (std::size_t t = 0; t < seq.length(); ++t) {
        for (std::size_t j = 0; j < seq.dim; ++j) {
            const float v = static_cast<float>(seq.frames.at(j, t));
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Tensor2D read_feature_file(const std::filesystem::path& path, std::size_t expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feature file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw FormatError("bad feature file magic: " + path.string());
    const uint32_t version = read_u32(in);
    if (version != kFeatureVersion)
        throw FormatError("unsupported feature file version: " + path.string());
    const uint32_t dim = read_u32(in);
    const uint32_t len = read_u32(in);
    if (!in) throw FormatError("truncated feature file header: " + path.string());
    if (dim != expected_dim)
        throw FormatError("feature dim mismatch in " + path.string() + ": manifest says " +
                          std::to_string(expected_dim) + ", file says " + std::to_string(dim));
    Tensor2D frames(dim, len);
    for (uint32_t t = 0; t < len; ++t) {
        for (uint32_t j = 0; j < dim; ++j) {
            float v;
            in.read(reinterpret_cast<char*>(&v), 4);
            if (!in) throw FormatError("feature file payload shorter than header declares: " +
                                       path.string());
            frames.at(j, t) = static_cast<double>(v);
        }
    }
    return frames;
}

}  // namespace

// Later-starting instance wins on overlap.
std::vector<std::size_t> labels_from_spans(const std::vector<InstanceSpan>& spans,
                                           std::size_t len) {
    std::vector<std::size_t> labels(len, 0);
    std::vector<InstanceSpan> ordered = spans;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const InstanceSpan& a, const InstanceSpan& b) { return a.start < b.start; });
    for (const auto& s : ordered)
        for (std::size_t t = s.start; t <= s.end; ++t) labels[t] = s.cls;
    return labels;
}

std::size_t FeatureDataset::total_frames() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.length();
    return n;
}

void validate_sequence(const FeatureSequence& seq, std::size_t num_classes) {
    const std::size_t len = seq.length();
    for (const auto& s : seq.spans) {
        if (s.cls < 1 || s.cls > num_classes)
            throw ValidationError("video " + seq.video_id + ": span class " +
                                  std::to_string(s.cls) + " outside 1.." +
                                  std::to_string(num_classes));
        if (s.end < s.start || s.end >= len)
            throw ValidationError("video " + seq.video_id + ": span [" +
                                  std::to_string(s.start) + "," + std::to_string(s.end) +
                                  "] out of range for length " + std::to_string(len));
    }
    if (seq.labels.size() != len)
        throw ValidationError("video " + seq.video_id + ": label count != frame count");
    const auto expected = labels_from_spans(seq.spans, len);
    if (seq.labels != expected)
        throw ValidationError("video " + seq.video_id + ": labels inconsistent with spans");
    for (double v : seq.frames.raw())
        if (!std::isfinite(v))
            throw ValidationError("video " + seq.video_id + ": non-finite feature value");
}

FeatureDataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest parse error: " + std::string(e.what()));
    }
    FeatureDataset ds;
    try {
        ds.num_classes = doc.at("C").get<std::size_t>();
        ds.dim = doc.at("D").get<std::size_t>();
        const auto base = manifest_path.parent_path();
        for (const auto& v : doc.at("videos")) {
            FeatureSequence seq;
            seq.video_id = v.at("id").get<std::string>();
            seq.dim = ds.dim;
            seq.frames = read_feature_file(base / v.at("features").get<std::string>(), ds.dim);
            for (const auto& sp : v.at("spans")) {
                if (!sp.is_array() || sp.size() != 3)
                    throw FormatError("span entry must be [class,start,end]");
                seq.spans.push_back({sp[0].get<std::size_t>(), sp[1].get<std::size_t>(),
                                     sp[2].get<std::size_t>()});
            }
            seq.labels = labels_from_spans(seq.spans, seq.length());
            validate_sequence(seq, ds.num_classes);
            ds.sequences.push_back(std::move(seq));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest field error: " + std::string(e.what()));
    }
    return ds;
}

void save_dataset(const FeatureDataset& ds, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "features");
    nlohmann::json doc;
    doc["C"] = ds.num_classes;
    doc["D"] = ds.dim;
    doc["videos"] = nlohmann::json::array();
    for (const auto& seq : ds.sequences) {
        const std::string rel = "features/" + seq.video_id + ".clrf";
        write_feature_file(out_dir / rel, seq);
        nlohmann::json v;
        v["id"] = seq.video_id;
        v["features"] = rel;
        v["spans"] = nlohmann::json::array();
        for (const auto& s : seq.spans) v["spans"].push_back({s.cls, s.start, s.end});
        doc["videos"].push_back(std::move(v));
    }
    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + out_dir.string());
    out << doc.dump(2) << "\n";
}

std::vector<double> synthetic_class_mean(std::size_t cls, std::size_t dim, double separation) {
    std::vector<double> mean(dim, 0.0);
    // Axis-aligned means: pairwise distance is exactly `separation`.
    mean[cls % dim] = separation / std::sqrt(2.0);
    return mean;
}

FeatureDataset gen_synthetic(std::size_t num_classes, std::size_t dim, std::size_t n_videos,
                             std::size_t frames_per_video, double separation, Rng rng) {
    if (num_classes < 1 || dim < 2 || frames_per_video < 10 || n_videos < 1)
        throw ParameterError("gen_synthetic: need C >= 1, D >= 2, frames >= 10, videos >= 1");
    if (separation < 0.0) throw ParameterError("gen_synthetic: separation must be >= 0");
    if (separation > 0.0 && num_classes + 1 > dim)
        throw ParameterError("gen_synthetic: need D >= C+1 for separated class means");

    FeatureDataset ds;
    ds.num_classes = num_classes;
    ds.dim = dim;

    std::vector<std::vector<double>> means;
    for (std::size_t c = 0; c <= num_classes; ++c)
        means.push_back(synthetic_class_mean(c, dim, separation));

    const std::size_t max_len = std::max<std::size_t>(5, frames_per_video / 5);
    for (std::size_t v = 0; v < n_videos; ++v) {
        FeatureSequence seq;
        seq.video_id = "synth_" + std::to_string(v);
        seq.dim = dim;

        const std::size_t n_inst = 1 + rng.below(3);
        for (std::size_t k = 0; k < n_inst; ++k) {
            const std::size_t cls = 1 + rng.below(num_classes);
            const std::size_t len = 5 + rng.below(max_len - 5 + 1);
            for (int attempt = 0; attempt < 20; ++attempt) {
                const std::size_t start = rng.below(frames_per_video - len + 1);
                const std::size_t end = start + len - 1;
                bool clash = false;
                for (const auto& s : seq.spans)
                    if (start <= s.end && s.start <= end) clash = true;
                if (!clash) {
                    seq.spans.push_back({cls, start, end});
                    break;
                }
            }
        }
        std::sort(seq.spans.begin(), seq.spans.end(),
                  [](const InstanceSpan& a, const InstanceSpan& b) { return a.start < b.start; });
        seq.labels = labels_from_spans(seq.spans, frames_per_video);

        seq.frames = Tensor2D(dim, frames_per_video);
        for (std::size_t t = 0; t < frames_per_video; ++t) {
            const auto& mean = means[seq.labels[t]];
            for (std::size_t j = 0; j < dim; ++j) {
                // float32 quantization keeps disk round-trips bit-exact
                seq.frames.at(j, t) =
                    static_cast<double>(static_cast<float>(mean[j] + rng.normal()));
            }
        }
        ds.sequences.push_back(std::move(seq));
    }
    return ds;
}

}  // namespace colar
