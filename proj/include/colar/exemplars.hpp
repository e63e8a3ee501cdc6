#pragma once

#include <filesystem>
#include <vector>

#include "colar/dataset.hpp"
#include "colar/rng.hpp"
#include "colar/tensor.hpp"

namespace colar {

// Per-category exemplar features from K-means, class 0 (background)
// included. exemplars[c] is M x D, centroids as rows.
struct ExemplarBank {
    std::size_t num_classes = 0;  // C
    std::size_t per_class = 0;    // M
    std::size_t dim = 0;
    std::vector<Tensor2D> exemplars;  // C+1 entries, each M x D
};

struct KmeansResult {
    Tensor2D centroids;  // M x D
    std::vector<std::size_t> assignments;
    double objective = 0.0;  // sum of squared distances
    std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded to
// the point farthest from its assigned centroid. The objective is
// non-increasing across iterations (asserted).
KmeansResult kmeans(const Tensor2D& points, std::size_t m, Rng rng, std::size_t max_iter = 100,
                    double tol = 1e-6);

// Runs kmeans per class over that class's training frames. Per-class runs
// are independent and execute in parallel on substreams of `rng`.
ExemplarBank build_bank(const FeatureDataset& train, std::size_t m, Rng rng);

// Binary "CLRB" file.
void save_bank(const ExemplarBank& bank, const std::filesystem::path& path);
ExemplarBank load_bank(const std::filesystem::path& path);

}  // namespace colar
