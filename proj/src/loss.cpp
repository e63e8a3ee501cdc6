#include "colar/loss.hpp"

#include <cmath>

#include "colar/errors.hpp"
#include "colar/ops.hpp"

namespace colar {

namespace {

constexpr double kProbClamp = 1e-12;

void check_inputs(std::span<const double> dyn_logits, std::span<const double> stat_logits,
                  std::span<const double> target) {
    if (dyn_logits.size() != stat_logits.size() || dyn_logits.size() != target.size())
        throw DimensionError("joint_loss: logit/target length mismatch");
    std::size_t ones = 0;
    for (double y : target) {
        if (y == 1.0)
            ones++;
        else if (y != 0.0)
            throw ValidationError("joint_loss: target is not one-hot");
    }
    if (ones != 1) throw ValidationError("joint_loss: target is not one-hot");
    for (std::size_t i = 0; i < dyn_logits.size(); ++i)
        if (!std::isfinite(dyn_logits[i]) || !std::isfinite(stat_logits[i]))
            throw NumericError("joint_loss: non-finite logits");
}

double clamped_log(double p) { return std::log(p < kProbClamp ? kProbClamp : p); }

}  // namespace

LossParts joint_loss(std::span<const double> dyn_logits, std::span<const double> stat_logits,
                     std::span<const double> target, double lambda) {
    check_inputs(dyn_logits, stat_logits, target);
    const auto pd = softmax(dyn_logits);
    const auto ps = softmax(stat_logits);

    LossParts parts;
    for (std::size_t i = 0; i < target.size(); ++i) {
        parts.cls_dynamic -= target[i] * clamped_log(pd[i]);
        parts.cls_static -= target[i] * clamped_log(ps[i]);
        parts.consistency += pd[i] * (clamped_log(pd[i]) - clamped_log(ps[i])) +
                             ps[i] * (clamped_log(ps[i]) - clamped_log(pd[i]));
    }
    parts.total = parts.cls_dynamic + parts.cls_static + lambda * parts.consistency;
    return parts;
}

void joint_loss_backward(std::span<const double> dyn_logits, std::span<const double> stat_logits,
                         std::span<const double> target, double lambda,
                         std::span<double> d_dyn_logits, std::span<double> d_stat_logits) {
    check_inputs(dyn_logits, stat_logits, target);
    const std::size_t n = target.size();
    const auto pd = softmax(dyn_logits);
    const auto ps = softmax(stat_logits);

    // c_i = log pd_i - log ps_i; <pd, c> reused for the softmax Jacobian
    std::vector<double> logratio(n);
    double pd_dot = 0.0, ps_dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        logratio[i] = clamped_log(pd[i]) - clamped_log(ps[i]);
        pd_dot += pd[i] * logratio[i];
        ps_dot += ps[i] * logratio[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        d_dyn_logits[i] = (pd[i] - target[i]) +
                          lambda * (pd[i] * (logratio[i] - pd_dot) + (pd[i] - ps[i]));
        d_stat_logits[i] = (ps[i] - target[i]) +
                           lambda * (ps[i] * (-logratio[i] + ps_dot) + (ps[i] - pd[i]));
    }
}

}  // namespace colar
