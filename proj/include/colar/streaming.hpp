#pragma once

#include <span>
#include <vector>

#include "colar/dataset.hpp"
#include "colar/exemplars.hpp"
#include "colar/model.hpp"

namespace colar {

struct StepResult {
    std::vector<double> fused;    // beta * static + (1-beta) * dynamic, sums to 1
    std::vector<double> dynamic;  // softmaxed dynamic logits
    std::vector<double> stat;     // softmaxed static logits
};

// Per-video online state: a ring buffer of the last T+1 observed frames.
// Frames beyond the current one are never touched.
class StreamState {
public:
    StreamState(const ModelParams& model, const ExemplarBank& bank);

    // Pushes the next observed frame and scores it.
    StepResult step(std::span<const double> frame);

    std::size_t frames_seen() const { return frames_seen_; }

private:
    const ModelParams& model_;
    const ExemplarBank& bank_;
    Tensor2D buffer_;  // D x (T+1) ring
    std::size_t frames_seen_ = 0;
};

// Runs step over the sequence from a fresh state; rows are fused scores.
// Also exposes the per-branch distributions when requested.
struct VideoScores {
    Tensor2D fused;    // L x (C+1), row-stochastic
    Tensor2D dynamic;  // L x (C+1)
    Tensor2D stat;     // L x (C+1)
};

VideoScores detect_video(const FeatureSequence& seq, const ModelParams& model,
                         const ExemplarBank& bank, double beta);

// JSON-lines prediction dump, one record per frame:
// {"video_id", "frame", "scores": [...], "s_d": [...], "s_s": [...]}
struct PredictionDump {
    std::vector<std::string> video_ids;
    std::vector<Tensor2D> fused;  // per video, L x (C+1)
};

void write_predictions(const FeatureDataset& ds, const std::vector<VideoScores>& scores,
                       const std::filesystem::path& path);
PredictionDump load_predictions(const std::filesystem::path& path);

}  // namespace colar
