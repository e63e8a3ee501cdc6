#include "colar/training.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "colar/dynamic_branch.hpp"
#include "colar/errors.hpp"
#include "colar/loss.hpp"
#include "colar/static_branch.hpp"

namespace colar {

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open train config: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("train config parse error: " + std::string(e.what()));
    }
    TrainConfig cfg;
    cfg.lr = doc.value("lr", cfg.lr);
    cfg.lr_decay_factor = doc.value("lr_decay_factor", cfg.lr_decay_factor);
    cfg.lr_decay_every = doc.value("lr_decay_every", cfg.lr_decay_every);
    cfg.batch_size = doc.value("batch_size", cfg.batch_size);
    cfg.epochs = doc.value("epochs", cfg.epochs);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("adam")) {
        const auto& a = doc["adam"];
        cfg.adam.beta1 = a.value("beta1", cfg.adam.beta1);
        cfg.adam.beta2 = a.value("beta2", cfg.adam.beta2);
        cfg.adam.eps = a.value("eps", cfg.adam.eps);
    }
    if (cfg.lr <= 0.0 || cfg.lr_decay_factor <= 0.0 || cfg.lr_decay_factor > 1.0 ||
        cfg.batch_size < 1 || cfg.lr_decay_every < 1)
        throw ValidationError("train config: lr > 0, 0 < lr_decay_factor <= 1, "
                              "batch_size >= 1, lr_decay_every >= 1 required");
    return cfg;
}

void write_loss_log(const std::vector<EpochStats>& curve, const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : curve) {
        doc.push_back({{"epoch", e.epoch},
                       {"L_cls_d", e.cls_dynamic},
                       {"L_cls_s", e.cls_static},
                       {"L_cons", e.consistency},
                       {"total", e.total},
                       {"lr", e.lr}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write loss log: " + path.string());
    out << doc.dump(2) << "\n";
}

AdamOptimizer::AdamOptimizer(const ModelParams& model, AdamConfig cfg)
    : cfg_(cfg), m_(zeros_like(model)), v_(zeros_like(model)) {}

void AdamOptimizer::step(ModelParams& model, const ModelParams& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto params = model.tensors();
    auto gs = grads.tensors();
    auto ms = m_.tensors();
    auto vs = v_.tensors();
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k]->raw();
        const auto& g = gs[k]->raw();
        auto& m = ms[k]->raw();
        auto& v = vs[k]->raw();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

namespace {

struct Sample {
    std::size_t video;
    std::size_t frame;
};

Tensor2D extract_window(const FeatureSequence& seq, std::size_t frame, std::size_t t_window) {
    const std::size_t start = frame >= t_window ? frame - t_window : 0;
    const std::size_t len = frame - start + 1;
    Tensor2D window(seq.dim, len);
    for (std::size_t l = 0; l < len; ++l)
        for (std::size_t j = 0; j < seq.dim; ++j) window.at(j, l) = seq.frames.at(j, start + l);
    return window;
}

}  // namespace

TrainResult train(const FeatureDataset& dataset, const ExemplarBank& bank, const Hyper& hyper,
                  const TrainConfig& config) {
    if (dataset.sequences.empty() || dataset.total_frames() == 0)
        throw DataError("train: empty dataset");
    if (bank.dim != dataset.dim || bank.num_classes != dataset.num_classes)
        throw DimensionError("train: bank does not match dataset");

    Rng rng(config.seed);
    TrainResult result;
    result.model = init_model(dataset.num_classes, dataset.dim, hyper, rng.child(0));
    AdamOptimizer opt(result.model, config.adam);

    std::vector<Sample> samples;
    for (std::size_t v = 0; v < dataset.sequences.size(); ++v)
        for (std::size_t t = 0; t < dataset.sequences[v].length(); ++t) samples.push_back({v, t});

    const std::size_t n_classes = dataset.num_classes + 1;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr =
            config.lr * std::pow(config.lr_decay_factor,
                                 static_cast<double>(epoch / config.lr_decay_every));
        Rng shuffle_rng = rng.child(1 + epoch);
        for (std::size_t i = samples.size(); i > 1; --i)
            std::swap(samples[i - 1], samples[shuffle_rng.below(i)]);

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;

        for (std::size_t off = 0; off < samples.size(); off += config.batch_size) {
            const std::size_t bsz = std::min(config.batch_size, samples.size() - off);
            std::vector<ModelParams> sample_grads(bsz, zeros_like(result.model));
            std::vector<LossParts> sample_loss(bsz);

#pragma omp parallel for schedule(dynamic)
            for (long s = 0; s < static_cast<long>(bsz); ++s) {
                const Sample& smp = samples[off + static_cast<std::size_t>(s)];
                const auto& seq = dataset.sequences[smp.video];
                const Tensor2D window = extract_window(seq, smp.frame, hyper.window);

                DynamicCache dcache;
                StaticCache scache;
                const auto dyn = forward_dynamic(window, result.model.dyn, &dcache);
                std::vector<double> frame(seq.dim);
                for (std::size_t j = 0; j < seq.dim; ++j) frame[j] = seq.frames.at(j, smp.frame);
                const auto stat = forward_static(frame, bank, result.model.stat, &scache);

                std::vector<double> target(n_classes, 0.0);
                target[seq.labels[smp.frame]] = 1.0;
                sample_loss[s] = joint_loss(dyn.logits, stat.logits, target, hyper.lambda);

                std::vector<double> d_dyn(n_classes), d_stat(n_classes);
                joint_loss_backward(dyn.logits, stat.logits, target, hyper.lambda, d_dyn,
                                    d_stat);
                auto& g = sample_grads[s];
                backward_dynamic(window, result.model.dyn, dcache, d_dyn, g.dyn);
                backward_static(frame, bank, result.model.stat, scache, d_stat, g.stat);
            }

            // fixed-order reduction keeps results thread-count independent
            ModelParams batch_grads = std::move(sample_grads[0]);
            auto acc = batch_grads.tensors();
            for (std::size_t s = 1; s < bsz; ++s) {
                auto gs = sample_grads[s].tensors();
                for (std::size_t k = 0; k < acc.size(); ++k) *acc[k] += *gs[k];
            }
            opt.step(result.model, batch_grads, lr);

            for (const auto& lp : sample_loss) {
                stats.cls_dynamic += lp.cls_dynamic;
                stats.cls_static += lp.cls_static;
                stats.consistency += lp.consistency;
                stats.total += lp.total;
            }
        }
        const double inv = 1.0 / static_cast<double>(samples.size());
        stats.cls_dynamic *= inv;
        stats.cls_static *= inv;
        stats.consistency *= inv;
        stats.total *= inv;
        result.curve.push_back(stats);
    }
    return result;
}

}  // namespace colar
