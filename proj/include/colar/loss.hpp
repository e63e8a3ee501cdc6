#pragma once

#include <span>
#include <vector>

namespace colar {

struct LossParts {
    double cls_dynamic = 0.0;
    double cls_static = 0.0;
    double consistency = 0.0;
    double total = 0.0;
};

// Cross-entropy on each branch's softmaxed logits plus symmetric KL
// between the two distributions, weighted by lambda. Probabilities are
// clamped at 1e-12 inside logs. `target` is the one-hot label.
LossParts joint_loss(std::span<const double> dyn_logits, std::span<const double> stat_logits,
                     std::span<const double> target, double lambda);

// Analytic gradient of the total loss w.r.t. both logit vectors.
void joint_loss_backward(std::span<const double> dyn_logits, std::span<const double> stat_logits,
                         std::span<const double> target, double lambda,
                         std::span<double> d_dyn_logits, std::span<double> d_stat_logits);

}  // namespace colar
