#include "colar/dynamic_branch.hpp"

#include "colar/errors.hpp"
#include "colar/kernels.hpp"
#include "colar/ops.hpp"

namespace colar {

namespace {

std::vector<double> column(const Tensor2D& m, std::size_t c) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m.at(r, c);
    return out;
}

void run_stack(const ConvStack& stack, const Tensor2D& x, Tensor2D& z1, Tensor2D& a1,
               Tensor2D& out) {
    const std::size_t h = stack.c1.w.rows();
    z1 = Tensor2D(h, x.cols());
    kernels::conv1d_forward(x, stack.c1.w, stack.c1.b, z1);
    a1 = z1;
    kernels::relu_inplace(a1);
    out = Tensor2D(h, x.cols());
    kernels::conv1d_forward(a1, stack.c2.w, stack.c2.b, out);
}

// dX contribution of one conv stack given upstream d(out); grads accumulated.
Tensor2D stack_backward(const ConvStack& stack, const Tensor2D& x, const Tensor2D& z1,
                        const Tensor2D& a1, const Tensor2D& dout, ConvStack& grads) {
    kernels::conv1d_grad_params(a1, dout, grads.c2.w, grads.c2.b);
    Tensor2D da1(a1.rows(), a1.cols());
    kernels::conv1d_grad_input(stack.c2.w, dout, da1);
    Tensor2D dz1(z1.rows(), z1.cols());
    kernels::relu_backward(z1, da1, dz1);
    kernels::conv1d_grad_params(x, dz1, grads.c1.w, grads.c1.b);
    Tensor2D dx(x.rows(), x.cols());
    kernels::conv1d_grad_input(stack.c1.w, dz1, dx);
    return dx;
}

}  // namespace

DynamicOutput forward_dynamic(const Tensor2D& window, const DynamicParams& params,
                              DynamicCache* cache) {
    if (window.cols() < 1) throw DimensionError("forward_dynamic: empty window");
    if (params.phi_k.c1.w.cols() != 3 * window.rows())
        throw DimensionError("forward_dynamic: window dim does not match params");
    const std::size_t len = window.cols();
    const std::size_t h = params.phi_k.c1.w.rows();

    DynamicCache local;
    DynamicCache& c = cache ? *cache : local;
    run_stack(params.phi_k, window, c.z1k, c.a1k, c.key);
    run_stack(params.phi_v, window, c.z1v, c.a1v, c.val);

    const auto key0 = column(c.key, len - 1);
    c.affinity.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
        const auto key_t = column(c.key, t);
        c.affinity[t] = cosine_similarity(key0, key_t);
    }
    c.attention = softmax(c.affinity);

    c.historical.assign(h, 0.0);
    for (std::size_t t = 0; t < len; ++t)
        for (std::size_t r = 0; r < h; ++r) c.historical[r] += c.attention[t] * c.val.at(r, t);

    DynamicOutput out;
    out.value0 = column(c.val, len - 1);
    c.summed.resize(h);
    for (std::size_t r = 0; r < h; ++r) c.summed[r] = out.value0[r] + c.historical[r];
    out.logits = linear(params.classifier.w, c.summed, params.classifier.b);
    out.attention = c.attention;
    out.historical = c.historical;
    return out;
}

Tensor2D backward_dynamic(const Tensor2D& window, const DynamicParams& params,
                          const DynamicCache& cache, std::span<const double> dlogits,
                          DynamicParams& grads) {
    const std::size_t len = window.cols();
    const std::size_t h = params.phi_k.c1.w.rows();
    if (dlogits.size() != params.classifier.w.rows())
        throw DimensionError("backward_dynamic: bad upstream gradient length");

    kernels::matvec_grad_params(cache.summed.data(), dlogits.data(), grads.classifier.w,
                                grads.classifier.b);
    std::vector<double> dsum(h, 0.0);
    kernels::matvec_grad_input(params.classifier.w, dlogits.data(), dsum.data());

    // dsum flows to both value0 and the historical feature
    Tensor2D dval(h, len);
    for (std::size_t r = 0; r < h; ++r) dval.at(r, len - 1) += dsum[r];

    std::vector<double> dattention(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        double acc = 0.0;
        for (std::size_t r = 0; r < h; ++r) acc += dsum[r] * cache.val.at(r, t);
        dattention[t] = acc;
        for (std::size_t r = 0; r < h; ++r) dval.at(r, t) += cache.attention[t] * dsum[r];
    }

    std::vector<double> daffinity(len, 0.0);
    softmax_backward(cache.attention, dattention, daffinity);

    Tensor2D dkey(h, len);
    const auto key0 = column(cache.key, len - 1);
    std::vector<double> dkey0(h, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        const auto key_t = column(cache.key, t);
        std::vector<double> dkey_t(h, 0.0);
        cosine_similarity_backward(key0, key_t, daffinity[t], dkey0, dkey_t);
        for (std::size_t r = 0; r < h; ++r) dkey.at(r, t) += dkey_t[r];
    }
    for (std::size_t r = 0; r < h; ++r) dkey.at(r, len - 1) += dkey0[r];

    Tensor2D dx = stack_backward(params.phi_k, window, cache.z1k, cache.a1k, dkey, grads.phi_k);
    Tensor2D dxv = stack_backward(params.phi_v, window, cache.z1v, cache.a1v, dval, grads.phi_v);
    dx += dxv;
    return dx;
}

}  // namespace colar
