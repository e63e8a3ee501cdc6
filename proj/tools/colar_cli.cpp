#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "colar/dataset.hpp"
#include "colar/errors.hpp"
#include "colar/evaluation.hpp"
#include "colar/exemplars.hpp"
#include "colar/model.hpp"
#include "colar/streaming.hpp"
#include "colar/training.hpp"

namespace fs = std::filesystem;
using namespace colar;

namespace {

int run_synth(const std::string& out_dir, std::size_t classes, std::size_t dim,
              std::size_t videos, std::size_t frames, double separation, uint64_t seed) {
    const auto ds = gen_synthetic(classes, dim, videos, frames, separation, Rng(seed));
    save_dataset(ds, out_dir);
    std::cout << "wrote " << videos << " videos (" << ds.total_frames() << " frames) to "
              << out_dir << "\n";
    return 0;
}

int run_exemplars(const std::string& data, std::size_t m, uint64_t seed,
                  const std::string& out) {
    const auto ds = load_dataset(data);
    const auto bank = build_bank(ds, m, Rng(seed));
    save_bank(bank, out);
    std::cout << "wrote bank: " << (bank.num_classes + 1) << " classes x " << bank.per_class
              << " exemplars x dim " << bank.dim << " -> " << out << "\n";
    return 0;
}

int run_train(const std::string& data, const std::string& bank_path, const std::string& config,
              const std::string& out, long epochs_override, Hyper hyper) {
    const auto ds = load_dataset(data);
    const auto bank = load_bank(bank_path);
    TrainConfig cfg;
    if (!config.empty()) cfg = load_train_config(config);
    if (epochs_override >= 0) cfg.epochs = static_cast<std::size_t>(epochs_override);
    hyper.per_class = bank.per_class;

    const auto result = train(ds, bank, hyper, cfg);
    save_checkpoint(result.model, out);
    write_loss_log(result.curve, out + ".loss.json");
    if (!result.curve.empty())
        std::cout << "epoch " << result.curve.back().epoch << " total loss "
                  << result.curve.back().total << "\n";
    std::cout << "wrote checkpoint " << out << " and loss log " << out << ".loss.json\n";
    return 0;
}

int run_detect(const std::string& data, const std::string& bank_path, const std::string& ckpt,
               double beta, const std::string& out) {
    const auto ds = load_dataset(data);
    const auto bank = load_bank(bank_path);
    const auto model = load_checkpoint(ckpt);
    if (beta < 0.0) beta = model.hyper.beta;

    std::vector<VideoScores> scores(ds.sequences.size());
    // streams are independent; model and bank are shared read-only
#pragma omp parallel for schedule(dynamic)
    for (long v = 0; v < static_cast<long>(ds.sequences.size()); ++v)
        scores[static_cast<std::size_t>(v)] =
            detect_video(ds.sequences[static_cast<std::size_t>(v)], model, bank, beta);
    write_predictions(ds, scores, out);
    std::cout << "wrote per-frame predictions for " << ds.sequences.size() << " videos to "
              << out << "\n";
    return 0;
}

int run_eval(const std::string& pred, const std::string& data, const std::string& out) {
    const auto ds = load_dataset(data);
    const auto preds = load_predictions(pred);
    const auto report = evaluate(preds, ds);
    std::ofstream file(out);
    if (!file) throw IoError("cannot write report: " + out);
    file << report.to_json() << "\n";
    std::cout << report.to_table();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Colar: exemplar-consultation online action detection"};
    app.require_subcommand(1);

    // synth
    std::string synth_out;
    std::size_t classes = 3, dim = 16, videos = 20, frames = 200;
    double separation = 10.0;
    uint64_t seed = 7;
    auto* synth = app.add_subcommand("synth", "generate a synthetic feature dataset");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--classes", classes, "action category count C");
    synth->add_option("--dim", dim, "feature dimension D");
    synth->add_option("--videos", videos, "number of videos");
    synth->add_option("--frames", frames, "frames per video");
    synth->add_option("--separation", separation, "class mean separation");
    synth->add_option("--seed", seed, "RNG seed");

    // exemplars
    std::string ex_data, ex_out;
    std::size_t ex_m = 8;
    uint64_t ex_seed = 0;
    auto* exemplars = app.add_subcommand("exemplars", "build the K-means exemplar bank");
    exemplars->add_option("--data", ex_data, "dataset manifest")->required();
    exemplars->add_option("--m", ex_m, "exemplars per category");
    exemplars->add_option("--seed", ex_seed, "RNG seed");
    exemplars->add_option("--out", ex_out, "output bank file")->required();

    // train
    std::string tr_data, tr_bank, tr_config, tr_out;
    long tr_epochs = -1;
    Hyper hyper;
    auto* train_cmd = app.add_subcommand("train", "train both branches jointly");
    train_cmd->add_option("--data", tr_data, "dataset manifest")->required();
    train_cmd->add_option("--bank", tr_bank, "exemplar bank file")->required();
    train_cmd->add_option("--config", tr_config, "training config JSON");
    train_cmd->add_option("--out", tr_out, "output checkpoint")->required();
    train_cmd->add_option("--epochs", tr_epochs, "override epoch count");
    train_cmd->add_option("--window", hyper.window, "history window length T");
    train_cmd->add_option("--channels", hyper.channels, "hidden width H");
    train_cmd->add_option("--lambda", hyper.lambda, "consistency loss weight");
    train_cmd->add_option("--beta", hyper.beta, "default fusion coefficient");

    // detect
    std::string dt_data, dt_bank, dt_ckpt, dt_out;
    double dt_beta = -1.0;  // negative -> use the checkpoint's beta
    auto* detect = app.add_subcommand("detect", "streaming per-frame detection");
    detect->add_option("--data", dt_data, "dataset manifest")->required();
    detect->add_option("--bank", dt_bank, "exemplar bank file")->required();
    detect->add_option("--ckpt", dt_ckpt, "model checkpoint")->required();
    detect->add_option("--beta", dt_beta, "fusion coefficient (default: checkpoint value)");
    detect->add_option("--out", dt_out, "output prediction dump (JSON lines)")->required();

    // eval
    std::string ev_pred, ev_data, ev_out;
    auto* eval_cmd = app.add_subcommand("eval", "compute mAP / cmAP / per-portion mcAP");
    eval_cmd->add_option("--pred", ev_pred, "prediction dump")->required();
    eval_cmd->add_option("--data", ev_data, "dataset manifest")->required();
    eval_cmd->add_option("--out", ev_out, "output report JSON")->required();

    try {
        app.parse(argc, argv);
        if (synth->parsed())
            return run_synth(synth_out, classes, dim, videos, frames, separation, seed);
        if (exemplars->parsed()) return run_exemplars(ex_data, ex_m, ex_seed, ex_out);
        if (train_cmd->parsed())
            return run_train(tr_data, tr_bank, tr_config, tr_out, tr_epochs, hyper);
        if (detect->parsed()) return run_detect(dt_data, dt_bank, dt_ckpt, dt_beta, dt_out);
        if (eval_cmd->parsed()) return run_eval(ev_pred, ev_data, ev_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        // data / format / validation / io / dimension
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
