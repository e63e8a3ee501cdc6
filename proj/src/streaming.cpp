#include "colar/streaming.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "colar/dynamic_branch.hpp"
#include "colar/errors.hpp"
#include "colar/ops.hpp"
#include "colar/static_branch.hpp"

namespace colar {

StreamState::StreamState(const ModelParams& model, const ExemplarBank& bank)
    : model_(model), bank_(bank), buffer_(model.dim, 0) {}

StepResult StreamState::step(std::span<const double> frame) {
    if (frame.size() != model_.dim) throw DimensionError("step: frame dim mismatch");
    const std::size_t cap = model_.hyper.window + 1;
    const std::size_t old_len = buffer_.cols();
    const std::size_t new_len = std::min(old_len + 1, cap);

    Tensor2D next(model_.dim, new_len);
    const std::size_t drop = old_len + 1 - new_len;  // 0 or 1 frames fall off the front
    for (std::size_t l = 0; l + 1 < new_len; ++l)
        for (std::size_t j = 0; j < model_.dim; ++j) next.at(j, l) = buffer_.at(j, l + drop);
    for (std::size_t j = 0; j < model_.dim; ++j) next.at(j, new_len - 1) = frame[j];
    buffer_ = std::move(next);
    ++frames_seen_;

    const auto dyn = forward_dynamic(buffer_, model_.dyn);
    const auto stat = forward_static(frame, bank_, model_.stat);

    StepResult res;
    res.dynamic = softmax(dyn.logits);
    res.stat = softmax(stat.logits);
    const double beta = model_.hyper.beta;
    res.fused.resize(res.dynamic.size());
    for (std::size_t i = 0; i < res.fused.size(); ++i)
        res.fused[i] = beta * res.stat[i] + (1.0 - beta) * res.dynamic[i];
    return res;
}

VideoScores detect_video(const FeatureSequence& seq, const ModelParams& model,
                         const ExemplarBank& bank, double beta) {
    if (beta < 0.0 || beta > 1.0) throw ParameterError("detect_video: beta must be in [0, 1]");
    ModelParams local = model;  // beta override without touching the caller's model
    local.hyper.beta = beta;

    const std::size_t n_classes = model.num_classes + 1;
    VideoScores out{Tensor2D(seq.length(), n_classes), Tensor2D(seq.length(), n_classes),
                    Tensor2D(seq.length(), n_classes)};
    StreamState state(local, bank);
    std::vector<double> frame(seq.dim);
    for (std::size_t t = 0; t < seq.length(); ++t) {
        for (std::size_t j = 0; j < seq.dim; ++j) frame[j] = seq.frames.at(j, t);
        const auto res = state.step(frame);
        for (std::size_t c = 0; c < n_classes; ++c) {
            out.fused.at(t, c) = res.fused[c];
            out.dynamic.at(t, c) = res.dynamic[c];
            out.stat.at(t, c) = res.stat[c];
        }
    }
    return out;
}

void write_predictions(const FeatureDataset& ds, const std::vector<VideoScores>& scores,
                       const std::filesystem::path& path) {
    if (scores.size() != ds.sequences.size())
        throw DimensionError("write_predictions: score count != video count");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write predictions: " + path.string());
    for (std::size_t v = 0; v < ds.sequences.size(); ++v) {
        const auto& seq = ds.sequences[v];
        const auto& sc = scores[v];
        for (std::size_t t = 0; t < seq.length(); ++t) {
            nlohmann::json rec;
            rec["video_id"] = seq.video_id;
            rec["frame"] = t;
            auto row = [&](const Tensor2D& m) {
                std::vector<double> r(m.cols());
                for (std::size_t c = 0; c < m.cols(); ++c) r[c] = m.at(t, c);
                return r;
            };
            rec["scores"] = row(sc.fused);
            rec["s_d"] = row(sc.dynamic);
            rec["s_s"] = row(sc.stat);
            out << rec.dump() << "\n";
        }
    }
}

PredictionDump load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions: " + path.string());
    PredictionDump dump;
    std::map<std::string, std::size_t> index;
    std::vector<std::map<std::size_t, std::vector<double>>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("prediction line parse error: " + std::string(e.what()));
        }
        const auto id = rec.at("video_id").get<std::string>();
        const auto frame = rec.at("frame").get<std::size_t>();
        auto scores = rec.at("scores").get<std::vector<double>>();
        auto it = index.find(id);
        if (it == index.end()) {
            it = index.emplace(id, dump.video_ids.size()).first;
            dump.video_ids.push_back(id);
            rows.emplace_back();
        }
        if (!rows[it->second].emplace(frame, std::move(scores)).second)
            throw ValidationError("duplicate prediction for video " + id + " frame " +
                                  std::to_string(frame));
    }
    for (std::size_t v = 0; v < rows.size(); ++v) {
        const auto& by_frame = rows[v];
        if (by_frame.empty()) continue;
        const std::size_t len = by_frame.rbegin()->first + 1;
        if (by_frame.size() != len)
            throw ValidationError("missing prediction frames for video " + dump.video_ids[v]);
        const std::size_t width = by_frame.begin()->second.size();
        Tensor2D mat(len, width);
        for (const auto& [t, sc] : by_frame) {
            if (sc.size() != width)
                throw ValidationError("ragged score rows for video " + dump.video_ids[v]);
            for (std::size_t c = 0; c < width; ++c) mat.at(t, c) = sc[c];
        }
        dump.fused.push_back(std::move(mat));
    }
    return dump;
}

}  // namespace colar
