#pragma once

#include <span>
#include <vector>

#include "colar/tensor.hpp"

namespace colar {

inline constexpr double kCosineEps = 1e-12;

// a.b / (|a||b| + eps). Zero vectors give 0 rather than an error.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Accumulates d cos(a,b)/da into da and d cos(a,b)/db into db, scaled by `up`.
void cosine_similarity_backward(std::span<const double> a, std::span<const double> b,
                                double up, std::span<double> da, std::span<double> db);

// Max-subtracted softmax; output sums to 1.
std::vector<double> softmax(std::span<const double> v);

// Given y = softmax(v) and upstream dy, accumulates dv += J^T dy.
void softmax_backward(std::span<const double> y, std::span<const double> dy,
                      std::span<double> dv);

// Wx + b
std::vector<double> linear(const Tensor2D& w, std::span<const double> x, const Tensor2D& b);

}  // namespace colar
