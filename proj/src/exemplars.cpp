#include "colar/exemplars.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "colar/errors.hpp"
#include "colar/kernels.hpp"

namespace colar {

namespace {

constexpr char kBankMagic[4] = {'C', 'L', 'R', 'B'};
constexpr uint32_t kBankVersion = 1;

Tensor2D kmeanspp_init(const Tensor2D& points, std::size_t m, Rng& rng) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();
    Tensor2D centroids(m, dim);
    std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());

    std::size_t first = rng.below(n);
    for (std::size_t j = 0; j < dim; ++j) centroids.at(0, j) = points.at(first, j);

    for (std::size_t k = 1; k < m; ++k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double diff = points.at(i, j) - centroids.at(k - 1, j);
                d2 += diff * diff;
            }
            best_d2[i] = std::min(best_d2[i], d2);
            total += best_d2[i];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.below(n);  // all remaining mass zero (duplicate points)
        } else {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += best_d2[i];
                if (acc > r) {
                    pick = i;
                    break;
                }
            }
        }
        for (std::size_t j = 0; j < dim; ++j) centroids.at(k, j) = points.at(pick, j);
    }
    return centroids;
}

}  // namespace

KmeansResult kmeans(const Tensor2D& points, std::size_t m, Rng rng, std::size_t max_iter,
                    double tol) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();
    if (m < 1 || n < m) throw ParameterError("kmeans: need N >= M >= 1");

    KmeansResult res;
    res.centroids = kmeanspp_init(points, m, rng);

    std::vector<double> sqdist;
    double prev_obj = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        kernels::kmeans_assign(points, res.centroids, res.assignments, sqdist);
        double obj = 0.0;
        for (double d : sqdist) obj += d;
        if (obj > prev_obj * (1.0 + 1e-9) + 1e-12)
            throw NumericError("kmeans: objective increased");
        res.objective = obj;
        res.iterations = iter + 1;
        const bool converged =
            std::isfinite(prev_obj) && std::abs(prev_obj - obj) <= tol * std::max(prev_obj, 1e-30);
        prev_obj = obj;

        // centroid update
        Tensor2D sums(m, dim);
        std::vector<std::size_t> counts(m, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = res.assignments[i];
            counts[a]++;
            for (std::size_t j = 0; j < dim; ++j) sums.at(a, j) += points.at(i, j);
        }
        bool repaired = false;
        for (std::size_t k = 0; k < m; ++k) {
            if (counts[k] == 0) {
                // reseed to the point farthest from its assigned centroid
                std::size_t far = 0;
                for (std::size_t i = 1; i < n; ++i)
                    if (sqdist[i] > sqdist[far]) far = i;
                for (std::size_t j = 0; j < dim; ++j) res.centroids.at(k, j) = points.at(far, j);
                sqdist[far] = 0.0;  // avoid reseeding two clusters to the same point
                repaired = true;
            } else {
                for (std::size_t j = 0; j < dim; ++j)
                    res.centroids.at(k, j) = sums.at(k, j) / static_cast<double>(counts[k]);
            }
        }
        if (converged && !repaired) break;
    }
    // final assignment against the last centroid update
    kernels::kmeans_assign(points, res.centroids, res.assignments, sqdist);
    double obj = 0.0;
    for (double d : sqdist) obj += d;
    res.objective = obj;
    return res;
}

ExemplarBank build_bank(const FeatureDataset& train, std::size_t m, Rng rng) {
    const std::size_t c_total = train.num_classes + 1;

    std::vector<Tensor2D> per_class_points(c_total);
    {
        std::vector<std::size_t> counts(c_total, 0);
        for (const auto& seq : train.sequences)
            for (std::size_t t = 0; t < seq.length(); ++t) counts[seq.labels[t]]++;
        for (std::size_t c = 0; c < c_total; ++c) {
            if (counts[c] < m)
                throw DataError("build_bank: class " + std::to_string(c) + " has only " +
                                std::to_string(counts[c]) + " frames, need at least " +
                                std::to_string(m));
            per_class_points[c] = Tensor2D(counts[c], train.dim);
        }
        std::vector<std::size_t> next(c_total, 0);
        for (const auto& seq : train.sequences) {
            for (std::size_t t = 0; t < seq.length(); ++t) {
                const std::size_t c = seq.labels[t];
                for (std::size_t j = 0; j < train.dim; ++j)
                    per_class_points[c].at(next[c], j) = seq.frames.at(j, t);
                next[c]++;
            }
        }
    }

    ExemplarBank bank;
    bank.num_classes = train.num_classes;
    bank.per_class = m;
    bank.dim = train.dim;
    bank.exemplars.resize(c_total);
#pragma omp parallel for schedule(dynamic)
    for (long c = 0; c < static_cast<long>(c_total); ++c) {
        auto res = kmeans(per_class_points[static_cast<std::size_t>(c)], m,
                          rng.child(static_cast<uint64_t>(c)));
        bank.exemplars[static_cast<std::size_t>(c)] = std::move(res.centroids);
    }
    return bank;
}

void save_bank(const ExemplarBank& bank, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open bank file for writing: " + path.string());
    out.write(kBankMagic, 4);
    const uint32_t header[4] = {kBankVersion, static_cast<uint32_t>(bank.num_classes),
                                static_cast<uint32_t>(bank.per_class),
                                static_cast<uint32_t>(bank.dim)};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const auto& mat : bank.exemplars) {
        for (double v : mat.raw()) {
            const float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
    if (!out) throw IoError("bank write failed: " + path.string());
}

ExemplarBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open bank file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kBankMagic, 4) != 0)
        throw FormatError("bad bank magic: " + path.string());
    uint32_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] != kBankVersion)
        throw FormatError("unsupported bank version: " + path.string());
    ExemplarBank bank;
    bank.num_classes = header[1];
    bank.per_class = header[2];
    bank.dim = header[3];
    bank.exemplars.assign(bank.num_classes + 1, Tensor2D(bank.per_class, bank.dim));
    for (auto& mat : bank.exemplars) {
        for (auto& v : mat.raw()) {
            float f;
            in.read(reinterpret_cast<char*>(&f), 4);
            if (!in) throw FormatError("truncated bank file: " + path.string());
            v = static_cast<double>(f);
        }
    }
    return bank;
}

}  // namespace colar
