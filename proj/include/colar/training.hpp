#pragma once

#include <filesystem>
#include <vector>

#include "colar/dataset.hpp"
#include "colar/exemplars.hpp"
#include "colar/model.hpp"

namespace colar {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    double lr = 3e-4;
    double lr_decay_factor = 0.5;
    std::size_t lr_decay_every = 5;  // epochs
    std::size_t batch_size = 16;
    std::size_t epochs = 0;
    AdamConfig adam;
    uint64_t seed = 0;
};

// Missing fields keep their defaults.
TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochStats {
    std::size_t epoch = 0;
    double cls_dynamic = 0.0;
    double cls_static = 0.0;
    double consistency = 0.0;
    double total = 0.0;
    double lr = 0.0;
};

void write_loss_log(const std::vector<EpochStats>& curve, const std::filesystem::path& path);

// Adam over the model's tensor list. First/second moment buffers share the
// model's shapes; the step counter drives bias correction.
class AdamOptimizer {
public:
    AdamOptimizer(const ModelParams& model, AdamConfig cfg);
    void step(ModelParams& model, const ModelParams& grads, double lr);

private:
    AdamConfig cfg_;
    ModelParams m_, v_;
    std::size_t t_ = 0;
};

struct TrainResult {
    ModelParams model;
    std::vector<EpochStats> curve;
};

// Joint training of both branches: windows of up to T+1 consecutive frames
// supervised at the last frame, one window per frame per epoch, shuffled
// with a seeded RNG. Batch gradients are summed; per-sample gradients are
// computed in parallel into per-sample buffers and reduced in sample
// order, so results do not depend on the thread count.
TrainResult train(const FeatureDataset& dataset, const ExemplarBank& bank, const Hyper& hyper,
                  const TrainConfig& config);

}  // namespace colar
