#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "colar/evaluation.hpp"
#include "colar/rng.hpp"

using namespace colar;

namespace {

// O(N^2) reference: walk ranks by the same ordering rule, accumulate
// precision at every positive, average over positives. Interpolation is
// applied by taking the running precision maximum from the bottom.
double brute_force_ap(const std::vector<double>& scores, const std::vector<bool>& positives) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<double> precision_at_positive;
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (!positives[order[rank]]) continue;
        ++tp;
        precision_at_positive.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
    }
    if (precision_at_positive.empty()) return 0.0;
    double running = 0.0;
    double sum = 0.0;
    for (auto it = precision_at_positive.rbegin(); it != precision_at_positive.rend(); ++it) {
        running = std::max(running, *it);
        sum += running;
    }
    return sum / static_cast<double>(precision_at_positive.size());
}

double brute_force_cap(const std::vector<double>& scores, const std::vector<bool>& positives,
                       double w) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    std::size_t npos = 0, tp = 0, fp = 0;
    for (const std::size_t i : order) {
        if (positives[i]) {
            ++tp;
            sum += w * tp / (w * tp + fp);
            ++npos;
        } else {
            ++fp;
        }
    }
    return npos == 0 ? 0.0 : sum / static_cast<double>(npos);
}

}  // namespace

TEST_CASE("perfect ranking gives AP and cAP of 1") {
    const std::vector<double> scores{0.9, 0.8, 0.3, 0.2};
    const std::vector<bool> positives{true, true, false, false};
    CHECK(average_precision(scores, positives) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(calibrated_ap(scores, positives, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(calibrated_ap(scores, positives, 7.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scores [0.9,0.8,0.7] with labels [T,F,T] give AP 5/6") {
    const std::vector<double> scores{0.9, 0.8, 0.7};
    const std::vector<bool> positives{true, false, true};
    CHECK(average_precision(scores, positives) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("worked cAP example with w = 2") {
    // ranking: P N P; terms 2*1/(2*1+0)=1 and 2*2/(2*2+1)=0.8; mean 0.9
    const std::vector<double> scores{0.9, 0.8, 0.7};
    const std::vector<bool> positives{true, false, true};
    CHECK(calibrated_ap(scores, positives, 2.0) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("all positives give 1 regardless of scores") {
    Rng rng(3);
    std::vector<double> scores(20);
    for (auto& s : scores) s = rng.uniform();
    const std::vector<bool> positives(20, true);
    CHECK(average_precision(scores, positives) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(calibrated_ap(scores, positives, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("no positives is rejected") {
    const std::vector<double> scores{0.5, 0.4};
    const std::vector<bool> positives{false, false};
    CHECK_THROWS_AS(average_precision(scores, positives), ValidationError);
    CHECK_THROWS_AS(calibrated_ap(scores, positives, 1.0), ValidationError);
}

TEST_CASE("all-equal scores resolve ties by index and match the brute force") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.below(30);
        std::vector<double> scores(n, 0.5);
        std::vector<bool> positives(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            positives[i] = rng.uniform() < 0.4;
            any = any || positives[i];
        }
        if (!any) positives[0] = true;
        CHECK(average_precision(scores, positives) ==
              doctest::Approx(brute_force_ap(scores, positives)).epsilon(1e-12));
    }
}

TEST_CASE("random instances agree with the quadratic oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> scores(n);
        std::vector<bool> positives(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            // duplicate scores are common on purpose
            scores[i] = std::round(rng.uniform() * 8.0) / 8.0;
            positives[i] = rng.uniform() < 0.3;
            any = any || positives[i];
        }
        if (!any) positives[rng.below(n)] = true;
        const double w = 0.25 + 3.0 * rng.uniform();
        CHECK(average_precision(scores, positives) ==
              doctest::Approx(brute_force_ap(scores, positives)).epsilon(1e-12));
        CHECK(calibrated_ap(scores, positives, w) ==
              doctest::Approx(brute_force_cap(scores, positives, w)).epsilon(1e-12));
    }
}

TEST_CASE("cAP with w = 1 equals non-interpolated AP") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng.below(40);
        std::vector<double> scores(n);
        std::vector<bool> positives(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.normal();
            positives[i] = rng.uniform() < 0.5;
            any = any || positives[i];
        }
        if (!any) positives[0] = true;

        // non-interpolated AP by direct rank walk
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        double sum = 0.0;
        std::size_t tp = 0, npos = 0;
        for (std::size_t rank = 0; rank < n; ++rank) {
            if (!positives[order[rank]]) continue;
            ++tp;
            ++npos;
            sum += static_cast<double>(tp) / static_cast<double>(rank + 1);
        }
        CHECK(calibrated_ap(scores, positives, 1.0) ==
              doctest::Approx(sum / static_cast<double>(npos)).epsilon(1e-12));
    }
}

TEST_CASE("AP is invariant under strictly monotone score transforms") {
    Rng rng(31);
    std::vector<double> scores(40);
    std::vector<bool> positives(40);
    for (std::size_t i = 0; i < 40; ++i) {
        scores[i] = 2.0 * rng.uniform() - 1.0;
        positives[i] = rng.uniform() < 0.3;
    }
    positives[5] = true;
    std::vector<double> warped(40);
    for (std::size_t i = 0; i < 40; ++i) warped[i] = std::exp(3.0 * scores[i]) + 7.0;
    CHECK(average_precision(scores, positives) ==
          doctest::Approx(average_precision(warped, positives)).epsilon(1e-12));
    CHECK(calibrated_ap(scores, positives, 2.0) ==
          doctest::Approx(calibrated_ap(warped, positives, 2.0)).epsilon(1e-12));
}

TEST_CASE("random scores concentrate cAP near w*pi / (w*pi + 1 - pi)") {
    // With scores independent of labels, precision at any rank converges to
    // the positive rate, so calibrated precision converges to the same
    // expression with the positives reweighted by w.
    Rng rng(37);
    const std::size_t n = 20000;
    const double pi = 0.2, w = 4.0;
    std::vector<double> scores(n);
    std::vector<bool> positives(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.uniform();
        positives[i] = rng.uniform() < pi;
    }
    const double expect = w * pi / (w * pi + (1.0 - pi));
    CHECK(calibrated_ap(scores, positives, w) == doctest::Approx(expect).epsilon(0.02));
}

namespace {

// Dataset with one labeled instance per class per video, instances at
// least 10 frames long so every decile is populated.
FeatureDataset make_eval_dataset() {
    FeatureDataset ds;
    ds.num_classes = 2;
    ds.dim = 1;
    for (int v = 0; v < 3; ++v) {
        FeatureSequence seq;
        seq.video_id = "v" + std::to_string(v);
        seq.dim = 1;
        seq.frames = Tensor2D(1, 60);
        seq.spans = {{1, 5, 24}, {2, 30, 49}};
        seq.labels = labels_from_spans(seq.spans, 60);
        ds.sequences.push_back(std::move(seq));
    }
    return ds;
}

std::vector<Tensor2D> one_hot_scores(const FeatureDataset& ds) {
    std::vector<Tensor2D> fused;
    for (const auto& seq : ds.sequences) {
        Tensor2D scores(seq.length(), ds.num_classes + 1);
        for (std::size_t t = 0; t < seq.length(); ++t) scores.at(t, seq.labels[t]) = 1.0;
        fused.push_back(std::move(scores));
    }
    return fused;
}

}  // namespace

TEST_CASE("one-hot ground-truth scores give a perfect report") {
    const auto ds = make_eval_dataset();
    const auto report = evaluate(one_hot_scores(ds), ds);
    REQUIRE(report.per_class_ap.size() == 2);
    for (const double ap : report.per_class_ap) CHECK(ap == doctest::Approx(1.0).epsilon(1e-12));
    for (const double cap : report.per_class_cap)
        CHECK(cap == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.map == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.cmap == doctest::Approx(1.0).epsilon(1e-12));
    for (const double m : report.portion_mcap) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pooled dataset evaluation matches a hand-pooled per-class AP") {
    const auto ds = make_eval_dataset();
    Rng rng(41);
    std::vector<Tensor2D> fused;
    for (const auto& seq : ds.sequences) {
        Tensor2D scores(seq.length(), 3);
        for (std::size_t t = 0; t < seq.length(); ++t) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                scores.at(t, c) = rng.uniform() + 1e-3;
                sum += scores.at(t, c);
            }
            for (std::size_t c = 0; c < 3; ++c) scores.at(t, c) /= sum;
        }
        fused.push_back(std::move(scores));
    }
    const auto report = evaluate(fused, ds);

    for (std::size_t cls = 1; cls <= 2; ++cls) {
        std::vector<double> pooled;
        std::vector<bool> positives;
        std::size_t v = 0;
        for (const auto& seq : ds.sequences) {
            for (std::size_t t = 0; t < seq.length(); ++t) {
                pooled.push_back(fused[v].at(t, cls));
                positives.push_back(seq.labels[t] == cls);
            }
            ++v;
        }
        const double npos =
            static_cast<double>(std::count(positives.begin(), positives.end(), true));
        const double w = (static_cast<double>(pooled.size()) - npos) / npos;
        CHECK(report.per_class_ap[cls - 1] ==
              doctest::Approx(average_precision(pooled, positives)).epsilon(1e-12));
        CHECK(report.per_class_cap[cls - 1] ==
              doctest::Approx(calibrated_ap(pooled, positives, w)).epsilon(1e-12));
    }
    CHECK(report.map ==
          doctest::Approx(0.5 * (report.per_class_ap[0] + report.per_class_ap[1])).epsilon(1e-12));
}

TEST_CASE("portion protocol scores the right deciles") {
    // One class, one 20-frame instance: decile d covers frames 10+2d, 11+2d.
    // Score frames so only the first decile ranks its positives on top.
    FeatureDataset ds;
    ds.num_classes = 1;
    ds.dim = 1;
    FeatureSequence seq;
    seq.video_id = "v0";
    seq.dim = 1;
    seq.frames = Tensor2D(1, 40);
    seq.spans = {{1, 10, 29}};
    seq.labels = labels_from_spans(seq.spans, 40);
    ds.sequences.push_back(std::move(seq));

    Tensor2D scores(40, 2);
    for (std::size_t t = 0; t < 40; ++t) {
        const double s = (t == 10 || t == 11) ? 0.9 : (t >= 12 && t <= 29 ? 0.1 : 0.5);
        scores.at(t, 1) = s;
        scores.at(t, 0) = 1.0 - s;
    }
    const auto report = evaluate({scores}, ds);
    CHECK(report.portion_mcap[0] == doctest::Approx(1.0).epsilon(1e-12));
    // later deciles rank below all 20 background frames at 0.5
    for (std::size_t d = 1; d < 10; ++d) CHECK(report.portion_mcap[d] < 0.5);
}

TEST_CASE("report serialization carries the headline numbers") {
    const auto ds = make_eval_dataset();
    const auto report = evaluate(one_hot_scores(ds), ds);
    const auto json = report.to_json();
    CHECK(json.find("\"map\"") != std::string::npos);
    CHECK(json.find("\"cmap\"") != std::string::npos);
    CHECK(json.find("\"portion_mcap\"") != std::string::npos);
    const auto table = report.to_table();
    CHECK(table.find("mAP") != std::string::npos);
}

TEST_CASE("evaluate rejects a score matrix with the wrong length") {
    const auto ds = make_eval_dataset();
    auto fused = one_hot_scores(ds);
    fused[1] = Tensor2D(59, 3);
    CHECK_THROWS_AS(evaluate(fused, ds), ValidationError);
}
