#pragma once

#include <span>
#include <vector>

#include "colar/model.hpp"
#include "colar/tensor.hpp"

namespace colar {

// Intermediate activations kept for the backward pass.
struct DynamicCache {
    Tensor2D z1k, a1k, key;  // key projection stack: pre-act, post-ReLU, output (H x L)
    Tensor2D z1v, a1v, val;  // value projection stack
    std::vector<double> affinity;    // cosine of current-frame key vs each key
    std::vector<double> attention;   // softmax of affinity
    std::vector<double> historical;  // attention-weighted sum of value features
    std::vector<double> summed;      // value0 + historical
};

struct DynamicOutput {
    std::vector<double> logits;      // C+1
    std::vector<double> attention;   // window length, sums to 1
    std::vector<double> historical;  // H
    std::vector<double> value0;      // H
};

// Window is D x L with the current frame last; L may be shorter than T+1
// at video start. Compares the current frame's key feature against every
// frame in the window, aggregates value features by the softmaxed cosine
// affinities, and classifies value0 + historical.
DynamicOutput forward_dynamic(const Tensor2D& window, const DynamicParams& params,
                              DynamicCache* cache = nullptr);

// Accumulates parameter gradients into `grads` and returns the gradient
// w.r.t. the input window.
Tensor2D backward_dynamic(const Tensor2D& window, const DynamicParams& params,
                          const DynamicCache& cache, std::span<const double> dlogits,
                          DynamicParams& grads);

}  // namespace colar
