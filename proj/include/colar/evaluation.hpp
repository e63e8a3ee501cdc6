#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "colar/dataset.hpp"
#include "colar/streaming.hpp"
#include "colar/tensor.hpp"

namespace colar {

struct EvalReport {
    std::vector<double> per_class_ap;   // classes 1..C
    std::vector<double> per_class_cap;  // classes 1..C
    double map = 0.0;
    double cmap = 0.0;
    std::array<double, 10> portion_mcap{};  // instance deciles 0-0.1 .. 0.9-1.0

    std::string to_json() const;
    std::string to_table() const;  // human-readable, percentages
};

// All-point interpolated average precision. Frames are ranked by
// descending score, ties broken by ascending index.
double average_precision(std::span<const double> scores, const std::vector<bool>& positives);

// Calibrated AP: mean over positives of w*TP / (w*TP + FP) at each
// positive's rank, same ranking rule. With w == 1 this is exactly
// non-interpolated AP.
double calibrated_ap(std::span<const double> scores, const std::vector<bool>& positives, double w);

// Frame-level protocol over the whole dataset: per class, frames of all
// videos are pooled before ranking; w is the ratio of that class's
// negative frames to its positive frames. Background (class 0) is
// excluded from the mAP/cmAP means. The per-portion mcAP splits every
// ground-truth instance into 10 equal portions and scores each decile's
// frames against all background frames.
// `fused` holds one L x (C+1) row-stochastic matrix per dataset video, in
// dataset order.
EvalReport evaluate(const std::vector<Tensor2D>& fused, const FeatureDataset& ds);

// Matches prediction videos to the dataset by id and checks coverage.
EvalReport evaluate(const PredictionDump& preds, const FeatureDataset& ds);

}  // namespace colar
