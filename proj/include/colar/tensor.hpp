#pragma once

#include <cstddef>
#include <vector>

#include "colar/errors.hpp"
#include "colar/rng.hpp"

namespace colar {

// Dense row-major matrix of doubles. The single carrier type for features,
// weights, activations and gradients. A column vector is rows x 1.
class Tensor2D {
public:
    Tensor2D() : rows_(0), cols_(0) {}
    Tensor2D(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    void fill_normal(Rng& rng, double scale = 1.0) {
        for (auto& v : data_) v = scale * rng.normal();
    }

    void fill_uniform(Rng& rng, double lo, double hi) {
        for (auto& v : data_) v = lo + (hi - lo) * rng.uniform();
    }

    bool same_shape(const Tensor2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    Tensor2D& operator+=(const Tensor2D& other) {
        if (!same_shape(other)) throw DimensionError("Tensor2D += shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    Tensor2D& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    bool operator==(const Tensor2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

}  // namespace colar
