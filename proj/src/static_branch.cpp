#include "colar/static_branch.hpp"

#include "colar/errors.hpp"
#include "colar/kernels.hpp"
#include "colar/ops.hpp"

namespace colar {

StaticOutput forward_static(std::span<const double> frame, const ExemplarBank& bank,
                            const StaticParams& params, StaticCache* cache) {
    const std::size_t dim = bank.dim;
    const std::size_t m = bank.per_class;
    const std::size_t n_cat = bank.num_classes + 1;
    const std::size_t h = params.psi_k.w.rows();
    if (frame.size() != dim || params.psi_k.w.cols() != dim)
        throw DimensionError("forward_static: frame/bank/params dim mismatch");

    StaticCache local;
    StaticCache& c = cache ? *cache : local;

    c.key0 = linear(params.gamma_k.w, frame, params.gamma_k.b);
    c.value0 = linear(params.gamma_v.w, frame, params.gamma_v.b);

    c.ex_key = Tensor2D(n_cat * m, h);
    c.ex_val = Tensor2D(n_cat * m, h);
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* ex = bank.exemplars[cat].data() + i * dim;
            const std::size_t row = cat * m + i;
            kernels::matvec(params.psi_k.w, ex, params.psi_k.b, c.ex_key.data() + row * h);
            kernels::matvec(params.psi_v.w, ex, params.psi_v.b, c.ex_val.data() + row * h);
        }
    }

    c.affinity = Tensor2D(n_cat, m);
    c.attention = Tensor2D(n_cat, m);
    c.category_features = Tensor2D(n_cat, h);
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
        for (std::size_t i = 0; i < m; ++i) {
            std::span<const double> ek(c.ex_key.data() + (cat * m + i) * h, h);
            c.affinity.at(cat, i) = cosine_similarity(c.key0, ek);
        }
        const auto att = softmax(std::span<const double>(c.affinity.data() + cat * m, m));
        for (std::size_t i = 0; i < m; ++i) {
            c.attention.at(cat, i) = att[i];
            const double* ev = c.ex_val.data() + (cat * m + i) * h;
            for (std::size_t r = 0; r < h; ++r) c.category_features.at(cat, r) += att[i] * ev[r];
        }
    }

    // shared H -> 1 scorer per category, softmaxed across categories
    c.raw_weights.resize(n_cat);
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
        double acc = params.cat_attn.b.at(0, 0);
        for (std::size_t r = 0; r < h; ++r)
            acc += params.cat_attn.w.at(0, r) * c.category_features.at(cat, r);
        c.raw_weights[cat] = acc;
    }
    c.weights = softmax(c.raw_weights);

    c.aggregated.assign(h, 0.0);
    for (std::size_t cat = 0; cat < n_cat; ++cat)
        for (std::size_t r = 0; r < h; ++r)
            c.aggregated[r] += c.weights[cat] * c.category_features.at(cat, r);

    c.summed.resize(h);
    for (std::size_t r = 0; r < h; ++r) c.summed[r] = c.value0[r] + c.aggregated[r];

    StaticOutput out;
    out.logits = linear(params.classifier.w, c.summed, params.classifier.b);
    out.per_category_attention = c.attention;
    out.category_features = c.category_features;
    out.category_weights = c.weights;
    out.aggregated = c.aggregated;
    out.value0 = c.value0;
    return out;
}

std::vector<double> backward_static(std::span<const double> frame, const ExemplarBank& bank,
                                    const StaticParams& params, const StaticCache& cache,
                                    std::span<const double> dlogits, StaticParams& grads) {
    const std::size_t dim = bank.dim;
    const std::size_t m = bank.per_class;
    const std::size_t n_cat = bank.num_classes + 1;
    const std::size_t h = params.psi_k.w.rows();
    if (dlogits.size() != params.classifier.w.rows())
        throw DimensionError("backward_static: bad upstream gradient length");

    kernels::matvec_grad_params(cache.summed.data(), dlogits.data(), grads.classifier.w,
                                grads.classifier.b);
    std::vector<double> dsum(h, 0.0);
    kernels::matvec_grad_input(params.classifier.w, dlogits.data(), dsum.data());

    // dsum -> value0 and aggregated
    std::vector<double> dvalue0 = dsum;
    std::vector<double> dweights(n_cat, 0.0);
    Tensor2D dcat(n_cat, h);
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
        double acc = 0.0;
        for (std::size_t r = 0; r < h; ++r) acc += dsum[r] * cache.category_features.at(cat, r);
        dweights[cat] = acc;
        for (std::size_t r = 0; r < h; ++r) dcat.at(cat, r) += cache.weights[cat] * dsum[r];
    }

    std::vector<double> draw(n_cat, 0.0);
    softmax_backward(cache.weights, dweights, draw);
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
        grads.cat_attn.b.at(0, 0) += draw[cat];
        for (std::size_t r = 0; r < h; ++r) {
            grads.cat_attn.w.at(0, r) += draw[cat] * cache.category_features.at(cat, r);
            dcat.at(cat, r) += draw[cat] * params.cat_attn.w.at(0, r);
        }
    }

    std::vector<double> dkey0(h, 0.0);
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
        std::vector<double> datt(m, 0.0);
        Tensor2D dex_val(m, h);
        for (std::size_t i = 0; i < m; ++i) {
            const double* ev = cache.ex_val.data() + (cat * m + i) * h;
            double acc = 0.0;
            for (std::size_t r = 0; r < h; ++r) acc += dcat.at(cat, r) * ev[r];
            datt[i] = acc;
            for (std::size_t r = 0; r < h; ++r)
                dex_val.at(i, r) = cache.attention.at(cat, i) * dcat.at(cat, r);
        }
        std::vector<double> daff(m, 0.0);
        softmax_backward(std::span<const double>(cache.attention.data() + cat * m, m), datt,
                         daff);
        for (std::size_t i = 0; i < m; ++i) {
            std::span<const double> ek(cache.ex_key.data() + (cat * m + i) * h, h);
            std::vector<double> dek(h, 0.0);
            cosine_similarity_backward(cache.key0, ek, daff[i], dkey0, dek);
            const double* ex = bank.exemplars[cat].data() + i * dim;
            kernels::matvec_grad_params(ex, dek.data(), grads.psi_k.w, grads.psi_k.b);
            kernels::matvec_grad_params(ex, dex_val.data() + i * h, grads.psi_v.w,
                                        grads.psi_v.b);
        }
    }

    std::vector<double> dframe(dim, 0.0);
    kernels::matvec_grad_params(frame.data(), dkey0.data(), grads.gamma_k.w, grads.gamma_k.b);
    kernels::matvec_grad_input(params.gamma_k.w, dkey0.data(), dframe.data());
    kernels::matvec_grad_params(frame.data(), dvalue0.data(), grads.gamma_v.w, grads.gamma_v.b);
    kernels::matvec_grad_input(params.gamma_v.w, dvalue0.data(), dframe.data());
    return dframe;
}

}  // namespace colar
