#include "colar/ops.hpp"

#include <algorithm>
#include <cmath>

#include "colar/errors.hpp"
#include "colar/kernels.hpp"

namespace colar {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw DimensionError("cosine_similarity: length mismatch or empty input");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) + kCosineEps);
}

void cosine_similarity_backward(std::span<const double> a, std::span<const double> b,
                                double up, std::span<double> da, std::span<double> db) {
    if (a.size() != b.size()) throw DimensionError("cosine_similarity_backward: length mismatch");
    double dot = 0.0, na2 = 0.0, nb2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na2 += a[i] * a[i];
        nb2 += b[i] * b[i];
    }
    const double na = std::sqrt(na2);
    const double nb = std::sqrt(nb2);
    const double denom = na * nb + kCosineEps;
    // d/da [dot/denom] = b/denom - dot * nb * (a/na) / denom^2
    const double inv = 1.0 / denom;
    const double ca = na > 0.0 ? dot * nb / (na * denom * denom) : 0.0;
    const double cb = nb > 0.0 ? dot * na / (nb * denom * denom) : 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        da[i] += up * (b[i] * inv - ca * a[i]);
        db[i] += up * (a[i] * inv - cb * b[i]);
    }
}

std::vector<double> softmax(std::span<const double> v) {
    if (v.empty()) throw DimensionError("softmax: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (auto& x : out) x /= sum;
    return out;
}

void softmax_backward(std::span<const double> y, std::span<const double> dy,
                      std::span<double> dv) {
    double inner = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) inner += y[i] * dy[i];
    for (std::size_t i = 0; i < y.size(); ++i) dv[i] += y[i] * (dy[i] - inner);
}

std::vector<double> linear(const Tensor2D& w, std::span<const double> x, const Tensor2D& b) {
    if (w.cols() != x.size() || b.rows() != w.rows() || b.cols() != 1)
        throw DimensionError("linear: shape mismatch");
    std::vector<double> y(w.rows());
    kernels::matvec(w, x.data(), b, y.data());
    return y;
}

}  // namespace colar
