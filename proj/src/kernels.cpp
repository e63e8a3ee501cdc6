#include "colar/kernels.hpp"

#include <limits>

namespace colar {

namespace {

inline double conv_out_element(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b,
                               std::size_t o, std::size_t l) {
    const std::size_t d_in = x.rows();
    const std::size_t len = x.cols();
    double acc = b.at(o, 0);
    for (int tap = 0; tap < 3; ++tap) {
        const long src = static_cast<long>(l) + tap - 1;
        if (src < 0 || src >= static_cast<long>(len)) continue;  // zero padding
        const double* wrow = w.data() + o * w.cols() + static_cast<std::size_t>(tap) * d_in;
        for (std::size_t j = 0; j < d_in; ++j)
            acc += wrow[j] * x.at(j, static_cast<std::size_t>(src));
    }
    return acc;
}

inline double matvec_element(const Tensor2D& w, const double* x, const Tensor2D& b,
                             std::size_t r) {
    double acc = b.at(r, 0);
    const double* wrow = w.data() + r * w.cols();
    for (std::size_t j = 0; j < w.cols(); ++j) acc += wrow[j] * x[j];
    return acc;
}

inline void assign_point(const Tensor2D& points, const Tensor2D& centroids, std::size_t n,
                         std::vector<std::size_t>& assign, std::vector<double>& sqdist) {
    const std::size_t dim = points.cols();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_m = 0;
    for (std::size_t m = 0; m < centroids.rows(); ++m) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff = points.at(n, j) - centroids.at(m, j);
            d2 += diff * diff;
        }
        if (d2 < best) {
            best = d2;
            best_m = m;
        }
    }
    assign[n] = best_m;
    sqdist[n] = best;
}

}  // namespace

namespace kernels {

void matvec(const Tensor2D& w, const double* x, const Tensor2D& b, double* y) {
    const long n = static_cast<long>(w.rows());
#pragma omp parallel for schedule(static) if (n > 256)
    for (long r = 0; r < n; ++r)
        y[r] = matvec_element(w, x, b, static_cast<std::size_t>(r));
}

void matvec_grad_input(const Tensor2D& w, const double* g, double* xg) {
    const long n = static_cast<long>(w.cols());
#pragma omp parallel for schedule(static) if (n > 256)
    for (long j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < w.rows(); ++r)
            acc += w.at(r, static_cast<std::size_t>(j)) * g[r];
        xg[j] += acc;
    }
}

void matvec_grad_params(const double* x, const double* g, Tensor2D& wg, Tensor2D& bg) {
    const long n = static_cast<long>(wg.rows());
#pragma omp parallel for schedule(static) if (n > 256)
    for (long r = 0; r < n; ++r) {
        double* wrow = wg.data() + static_cast<std::size_t>(r) * wg.cols();
        for (std::size_t j = 0; j < wg.cols(); ++j) wrow[j] += g[r] * x[j];
        bg.at(static_cast<std::size_t>(r), 0) += g[r];
    }
}

void conv1d_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b, Tensor2D& y) {
    if (w.cols() != 3 * x.rows() || y.rows() != w.rows() || y.cols() != x.cols())
        throw DimensionError("conv1d_forward shape mismatch");
    const long total = static_cast<long>(y.rows() * y.cols());
#pragma omp parallel for schedule(static) if (total > 512)
    for (long i = 0; i < total; ++i) {
        const std::size_t o = static_cast<std::size_t>(i) / y.cols();
        const std::size_t l = static_cast<std::size_t>(i) % y.cols();
        y.at(o, l) = conv_out_element(x, w, b, o, l);
    }
}

void conv1d_grad_input(const Tensor2D& w, const Tensor2D& dy, Tensor2D& dx) {
    const std::size_t d_in = dx.rows();
    const std::size_t len = dx.cols();
    const long total = static_cast<long>(d_in * len);
    // dx[j, l] = sum_o sum_tap w[o, tap*D+j] * dy[o, l - (tap-1)]
#pragma omp parallel for schedule(static) if (total > 512)
    for (long i = 0; i < total; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) / len;
        const std::size_t l = static_cast<std::size_t>(i) % len;
        double acc = 0.0;
        for (std::size_t o = 0; o < dy.rows(); ++o) {
            for (int tap = 0; tap < 3; ++tap) {
                const long dst = static_cast<long>(l) - (tap - 1);
                if (dst < 0 || dst >= static_cast<long>(len)) continue;
                acc += w.at(o, static_cast<std::size_t>(tap) * d_in + j) *
                       dy.at(o, static_cast<std::size_t>(dst));
            }
        }
        dx.at(j, l) = acc;
    }
}

void conv1d_grad_params(const Tensor2D& x, const Tensor2D& dy, Tensor2D& wg, Tensor2D& bg) {
    const std::size_t d_in = x.rows();
    const std::size_t len = x.cols();
    const long n_out = static_cast<long>(dy.rows());
#pragma omp parallel for schedule(static) if (n_out > 32)
    for (long o = 0; o < n_out; ++o) {
        for (std::size_t l = 0; l < len; ++l) {
            const double g = dy.at(static_cast<std::size_t>(o), l);
            bg.at(static_cast<std::size_t>(o), 0) += g;
            for (int tap = 0; tap < 3; ++tap) {
                const long src = static_cast<long>(l) + tap - 1;
                if (src < 0 || src >= static_cast<long>(len)) continue;
                double* wrow = wg.data() + static_cast<std::size_t>(o) * wg.cols() +
                               static_cast<std::size_t>(tap) * d_in;
                for (std::size_t j = 0; j < d_in; ++j)
                    wrow[j] += g * x.at(j, static_cast<std::size_t>(src));
            }
        }
    }
}

void relu_inplace(Tensor2D& x) {
    for (auto& v : x.raw())
        if (v < 0.0) v = 0.0;
}

void relu_backward(const Tensor2D& z, const Tensor2D& dy, Tensor2D& dz) {
    for (std::size_t i = 0; i < z.size(); ++i)
        dz.raw()[i] = z.raw()[i] > 0.0 ? dy.raw()[i] : 0.0;
}

void kmeans_assign(const Tensor2D& points, const Tensor2D& centroids,
                   std::vector<std::size_t>& assign, std::vector<double>& sqdist) {
    const long n = static_cast<long>(points.rows());
    assign.resize(points.rows());
    sqdist.resize(points.rows());
#pragma omp parallel for schedule(static) if (n > 64)
    for (long i = 0; i < n; ++i)
        assign_point(points, centroids, static_cast<std::size_t>(i), assign, sqdist);
}

}  // namespace kernels

namespace serial {

void matvec(const Tensor2D& w, const double* x, const Tensor2D& b, double* y) {
    for (std::size_t r = 0; r < w.rows(); ++r) y[r] = matvec_element(w, x, b, r);
}

void conv1d_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b, Tensor2D& y) {
    for (std::size_t o = 0; o < y.rows(); ++o)
        for (std::size_t l = 0; l < y.cols(); ++l) y.at(o, l) = conv_out_element(x, w, b, o, l);
}

void kmeans_assign(const Tensor2D& points, const Tensor2D& centroids,
                   std::vector<std::size_t>& assign, std::vector<double>& sqdist) {
    assign.resize(points.rows());
    sqdist.resize(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i)
        assign_point(points, centroids, i, assign, sqdist);
}

}  // namespace serial

}  // namespace colar
