#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "colar/rng.hpp"
#include "colar/tensor.hpp"

namespace colar {

struct InstanceSpan {
    std::size_t cls;    // 1..C
    std::size_t start;  // inclusive
    std::size_t end;    // inclusive
};

// One video: per-frame features (D x L, frames are columns) plus per-frame
// class labels over C+1 classes, class 0 = background.
struct FeatureSequence {
    std::string video_id;
    std::size_t dim = 0;
    Tensor2D frames;                  // D x L
    std::vector<std::size_t> labels;  // length L, values in [0, C]
    std::vector<InstanceSpan> spans;

    std::size_t length() const { return frames.cols(); }
};

struct FeatureDataset {
    std::size_t num_classes = 0;  // C (actions; background is class 0 extra)
    std::size_t dim = 0;
    std::vector<FeatureSequence> sequences;

    std::size_t total_frames() const;
};

// Manifest + per-video binary feature files ("CLRF"). Validates the
// label/span consistency invariants on load.
FeatureDataset load_dataset(const std::filesystem::path& manifest_path);
void save_dataset(const FeatureDataset& ds, const std::filesystem::path& out_dir);

// Background-dominated sequences with 1-3 embedded action instances per
// video (each >= 5 frames). Class means are axis-aligned with pairwise
// distance == separation; features are mean + unit Gaussian noise,
// quantized to float32 so that save/load round-trips bit-exactly.
FeatureDataset gen_synthetic(std::size_t num_classes, std::size_t dim, std::size_t n_videos,
                             std::size_t frames_per_video, double separation, Rng rng);

// The generating mean for class c under gen_synthetic's scheme.
std::vector<double> synthetic_class_mean(std::size_t cls, std::size_t dim, double separation);

// Per-frame labels implied by the spans; later-starting instance wins on
// overlap.
std::vector<std::size_t> labels_from_spans(const std::vector<InstanceSpan>& spans,
                                           std::size_t len);

// Derives labels from spans and checks consistency; throws ValidationError.
void validate_sequence(const FeatureSequence& seq, std::size_t num_classes);

}  // namespace colar
