#pragma once

#include <span>
#include <vector>

#include "colar/exemplars.hpp"
#include "colar/model.hpp"
#include "colar/tensor.hpp"

namespace colar {

struct StaticCache {
    std::vector<double> key0, value0;  // frame projections (H)
    Tensor2D ex_key, ex_val;           // exemplar projections, (C+1)*M x H
    Tensor2D affinity, attention;      // (C+1) x M; attention rows sum to 1
    Tensor2D category_features;        // (C+1) x H
    std::vector<double> raw_weights;   // per-category scores before softmax
    std::vector<double> weights;       // a, sums to 1
    std::vector<double> aggregated;    // e (H)
    std::vector<double> summed;        // value0 + aggregated
};

struct StaticOutput {
    std::vector<double> logits;        // C+1
    Tensor2D per_category_attention;   // (C+1) x M
    Tensor2D category_features;        // (C+1) x H
    std::vector<double> category_weights;  // C+1
    std::vector<double> aggregated;    // H
    std::vector<double> value0;        // H
};

// Scores frame f0 against every category's exemplars: cosine attention
// over exemplars within each category, a shared linear scorer softmaxed
// across categories, then classify value0 + aggregated.
StaticOutput forward_static(std::span<const double> frame, const ExemplarBank& bank,
                            const StaticParams& params, StaticCache* cache = nullptr);

// Accumulates parameter gradients into `grads` (exemplars are constants)
// and returns the gradient w.r.t. the frame.
std::vector<double> backward_static(std::span<const double> frame, const ExemplarBank& bank,
                                    const StaticParams& params, const StaticCache& cache,
                                    std::span<const double> dlogits, StaticParams& grads);

}  // namespace colar
