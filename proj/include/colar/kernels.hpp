#pragma once

#include <cstddef>
#include <vector>

#include "colar/tensor.hpp"

namespace colar {

// Hot numeric kernels. The `kernels` namespace holds the OpenMP-parallel
// implementations used by the library; `serial` holds straight-loop
// references kept for testing and benchmarking. Each output element is
// produced by one fixed-order scalar loop, so the two variants agree
// bit-for-bit and results do not depend on the thread count.

namespace kernels {

// y = W x + b. W is out x in, b is out x 1.
void matvec(const Tensor2D& w, const double* x, const Tensor2D& b, double* y);

// xg += W^T g
void matvec_grad_input(const Tensor2D& w, const double* g, double* xg);

// wg += g x^T, bg += g
void matvec_grad_params(const double* x, const double* g, Tensor2D& wg, Tensor2D& bg);

// Temporal convolution, kernel width 3, zero padding by one frame on both
// ends of the window. x is D_in x L, w is D_out x (3*D_in) with column
// layout tap*D_in + j for taps {-1, 0, +1}, b is D_out x 1, y is D_out x L.
void conv1d_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b, Tensor2D& y);

// dx = conv-transpose of dy through w (dx must be pre-sized D_in x L, overwritten).
void conv1d_grad_input(const Tensor2D& w, const Tensor2D& dy, Tensor2D& dx);

// wg += dL/dw, bg += dL/db given input x and upstream dy.
void conv1d_grad_params(const Tensor2D& x, const Tensor2D& dy, Tensor2D& wg, Tensor2D& bg);

void relu_inplace(Tensor2D& x);

// dz = dy where pre-activation z > 0, else 0 (dz overwritten).
void relu_backward(const Tensor2D& z, const Tensor2D& dy, Tensor2D& dz);

// Nearest-centroid assignment. Returns per-point squared distance to its
// centroid in `sqdist`; ties go to the lowest centroid index.
void kmeans_assign(const Tensor2D& points, const Tensor2D& centroids,
                   std::vector<std::size_t>& assign, std::vector<double>& sqdist);

}  // namespace kernels

namespace serial {

void matvec(const Tensor2D& w, const double* x, const Tensor2D& b, double* y);
void conv1d_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b, Tensor2D& y);
void kmeans_assign(const Tensor2D& points, const Tensor2D& centroids,
                   std::vector<std::size_t>& assign, std::vector<double>& sqdist);

}  // namespace serial

}  // namespace colar
