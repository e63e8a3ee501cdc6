#pragma once

#include <filesystem>
#include <vector>

#include "colar/rng.hpp"
#include "colar/tensor.hpp"

namespace colar {

struct LinearLayer {
    Tensor2D w;  // out x in
    Tensor2D b;  // out x 1
};

// Temporal conv layer, kernel width 3. w is out x (3*in), column layout
// tap*in + j for taps {-1, 0, +1}.
struct ConvLayer {
    Tensor2D w;
    Tensor2D b;
};

// Two stacked kernel-3 temporal convs with ReLU between: in -> H -> H.
struct ConvStack {
    ConvLayer c1;
    ConvLayer c2;
};

// Key/value projections over the history window plus the classifier.
struct DynamicParams {
    ConvStack phi_k;
    ConvStack phi_v;
    LinearLayer classifier;  // H -> C+1
};

// Key/value projections for exemplars (psi) and the frame (gamma), the
// shared per-category attention scorer, and the classifier.
struct StaticParams {
    LinearLayer psi_k;     // D -> H
    LinearLayer psi_v;     // D -> H
    LinearLayer gamma_k;   // D -> H
    LinearLayer gamma_v;   // D -> H
    LinearLayer cat_attn;  // H -> 1, shared across categories
    LinearLayer classifier;  // H -> C+1
};

struct Hyper {
    std::size_t window = 64;    // T: historical frames consulted
    std::size_t channels = 1024;  // H
    std::size_t per_class = 8;  // M exemplars per category
    double lambda = 1.0;        // consistency loss weight
    double beta = 0.3;          // fusion coefficient
};

struct ModelParams {
    std::size_t num_classes = 0;  // C
    std::size_t dim = 0;          // D
    Hyper hyper;
    DynamicParams dyn;
    StaticParams stat;

    // All learnable tensors in the serialization order (also the order
    // used by the optimizer and by flatten/unflatten):
    // phi_k.c1.{w,b}, phi_k.c2.{w,b}, phi_v.c1.{w,b}, phi_v.c2.{w,b},
    // dyn.classifier.{w,b}, psi_k.{w,b}, psi_v.{w,b}, gamma_k.{w,b},
    // gamma_v.{w,b}, cat_attn.{w,b}, stat.classifier.{w,b}
    std::vector<Tensor2D*> tensors();
    std::vector<const Tensor2D*> tensors() const;

    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
    std::size_t param_count() const;
};

// Allocates all tensors per (C, D, hyper) with Kaiming-uniform weights and
// zero biases, drawn deterministically from `rng`.
ModelParams init_model(std::size_t num_classes, std::size_t dim, const Hyper& hyper, Rng rng);

// Same shapes, all zeros. Used for gradients and optimizer state.
ModelParams zeros_like(const ModelParams& model);

// Binary "CLRC" checkpoint, float64 little-endian, atomic write.
void save_checkpoint(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace colar
