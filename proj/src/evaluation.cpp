#include "colar/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "colar/errors.hpp"

namespace colar {

namespace {

// Rank order: descending score, ascending index on ties.
std::vector<std::size_t> ranking(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

std::size_t count_positives(const std::vector<bool>& positives) {
    std::size_t n = 0;
    for (bool p : positives) n += p;
    return n;
}

}  // namespace

double average_precision(std::span<const double> scores, const std::vector<bool>& positives) {
    if (scores.size() != positives.size())
        throw DimensionError("average_precision: length mismatch");
    const std::size_t n_pos = count_positives(positives);
    if (n_pos == 0) throw ValidationError("average_precision: no positive frames");

    const auto order = ranking(scores);
    std::vector<double> prec_at_pos;
    prec_at_pos.reserve(n_pos);
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (positives[order[rank]]) {
            ++tp;
            prec_at_pos.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
        }
    }
    // precision envelope: non-increasing from the end; each positive adds
    // a recall increment of 1/n_pos
    double envelope = 0.0;
    double ap = 0.0;
    for (auto it = prec_at_pos.rbegin(); it != prec_at_pos.rend(); ++it) {
        envelope = std::max(envelope, *it);
        ap += envelope;
    }
    return ap / static_cast<double>(n_pos);
}

double calibrated_ap(std::span<const double> scores, const std::vector<bool>& positives, double w) {
    if (scores.size() != positives.size()) throw DimensionError("calibrated_ap: length mismatch");
    if (w <= 0.0) throw ParameterError("calibrated_ap: w must be > 0");
    const std::size_t n_pos = count_positives(positives);
    if (n_pos == 0) throw ValidationError("calibrated_ap: no positive frames");

    const auto order = ranking(scores);
    double sum = 0.0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (positives[order[rank]]) {
            ++tp;
            sum += w * static_cast<double>(tp) /
                   (w * static_cast<double>(tp) + static_cast<double>(fp));
        } else {
            ++fp;
        }
    }
    return sum / static_cast<double>(n_pos);
}

EvalReport evaluate(const std::vector<Tensor2D>& fused, const FeatureDataset& ds) {
    if (fused.size() != ds.sequences.size())
        throw ValidationError("evaluate: prediction video count != dataset video count");
    const std::size_t n_classes = ds.num_classes + 1;
    for (std::size_t v = 0; v < fused.size(); ++v) {
        if (fused[v].rows() != ds.sequences[v].length() || fused[v].cols() != n_classes)
            throw ValidationError("evaluate: predictions for video " + ds.sequences[v].video_id +
                                  " do not cover every frame exactly once");
    }

    // pool frames across videos, dataset order = tie-break order
    const std::size_t total = ds.total_frames();
    std::vector<std::size_t> labels(total);
    std::vector<int> decile(total, -1);  // instance decile of each action frame
    Tensor2D pooled(total, n_classes);
    {
        std::size_t idx = 0;
        for (std::size_t v = 0; v < ds.sequences.size(); ++v) {
            const auto& seq = ds.sequences[v];
            for (std::size_t t = 0; t < seq.length(); ++t, ++idx) {
                labels[idx] = seq.labels[t];
                for (std::size_t c = 0; c < n_classes; ++c) pooled.at(idx, c) = fused[v].at(t, c);
            }
            const std::size_t base = idx - seq.length();
            for (const auto& sp : seq.spans) {
                const std::size_t len = sp.end - sp.start + 1;
                for (std::size_t k = 0; k < len; ++k) {
                    const std::size_t frame = base + sp.start + k;
                    if (labels[frame] == sp.cls)
                        decile[frame] = static_cast<int>(std::min<std::size_t>(9, k * 10 / len));
                }
            }
        }
    }

    EvalReport report;
    for (std::size_t c = 1; c < n_classes; ++c) {
        std::vector<double> scores(total);
        std::vector<bool> positives(total);
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < total; ++i) {
            scores[i] = pooled.at(i, c);
            positives[i] = labels[i] == c;
            n_pos += positives[i];
        }
        if (n_pos == 0)
            throw ValidationError("evaluate: class " + std::to_string(c) +
                                  " has no frames in the dataset");
        const double w = static_cast<double>(total - n_pos) / static_cast<double>(n_pos);
        report.per_class_ap.push_back(average_precision(scores, positives));
        report.per_class_cap.push_back(calibrated_ap(scores, positives, w));
    }
    report.map = std::accumulate(report.per_class_ap.begin(), report.per_class_ap.end(), 0.0) /
                 static_cast<double>(report.per_class_ap.size());
    report.cmap = std::accumulate(report.per_class_cap.begin(), report.per_class_cap.end(), 0.0) /
                  static_cast<double>(report.per_class_cap.size());

    // per-portion protocol: positives restricted to one instance decile,
    // negatives are all background frames
    std::vector<std::size_t> background;
    for (std::size_t i = 0; i < total; ++i)
        if (labels[i] == 0) background.push_back(i);
    for (int p = 0; p < 10; ++p) {
        double sum = 0.0;
        std::size_t n_valid = 0;
        for (std::size_t c = 1; c < n_classes; ++c) {
            std::vector<double> scores;
            std::vector<bool> positives;
            std::size_t n_pos = 0;
            for (std::size_t i = 0; i < total; ++i) {
                if (labels[i] == c && decile[i] == p) {
                    scores.push_back(pooled.at(i, c));
                    positives.push_back(true);
                    ++n_pos;
                }
            }
            if (n_pos == 0) continue;  // instance too short to reach this decile
            for (std::size_t i : background) {
                scores.push_back(pooled.at(i, c));
                positives.push_back(false);
            }
            const double w = static_cast<double>(background.size()) / static_cast<double>(n_pos);
            sum += calibrated_ap(scores, positives, w);
            ++n_valid;
        }
        report.portion_mcap[static_cast<std::size_t>(p)] =
            n_valid > 0 ? sum / static_cast<double>(n_valid) : 0.0;
    }
    return report;
}

EvalReport evaluate(const PredictionDump& preds, const FeatureDataset& ds) {
    std::vector<Tensor2D> aligned;
    aligned.reserve(ds.sequences.size());
    for (const auto& seq : ds.sequences) {
        const auto it = std::find(preds.video_ids.begin(), preds.video_ids.end(), seq.video_id);
        if (it == preds.video_ids.end())
            throw ValidationError("evaluate: no predictions for video " + seq.video_id);
        aligned.push_back(preds.fused[static_cast<std::size_t>(it - preds.video_ids.begin())]);
    }
    return evaluate(aligned, ds);
}

std::string EvalReport::to_json() const {
    nlohmann::json doc;
    doc["per_class_ap"] = per_class_ap;
    doc["per_class_cap"] = per_class_cap;
    doc["map"] = map;
    doc["cmap"] = cmap;
    doc["portion_mcap"] = portion_mcap;
    return doc.dump(2);
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << "class      AP(%)   cAP(%)\n";
    for (std::size_t c = 0; c < per_class_ap.size(); ++c)
        out << "  " << (c + 1) << "      " << 100.0 * per_class_ap[c] << "   "
            << 100.0 * per_class_cap[c] << "\n";
    out << "mAP  " << 100.0 * map << "%   cmAP " << 100.0 * cmap << "%\n";
    out << "portion mcAP(%):";
    for (double v : portion_mcap) out << " " << 100.0 * v;
    out << "\n";
    return out.str();
}

}  // namespace colar
