#include "colar/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "colar/errors.hpp"

namespace colar {

namespace {

constexpr char kCkptMagic[4] = {'C', 'L', 'R', 'C'};
constexpr uint32_t kCkptVersion = 1;

LinearLayer make_linear(std::size_t out, std::size_t in, Rng& rng) {
    LinearLayer layer{Tensor2D(out, in), Tensor2D(out, 1)};
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    layer.w.fill_uniform(rng, -bound, bound);
    return layer;
}

ConvLayer make_conv(std::size_t out, std::size_t in, Rng& rng) {
    ConvLayer layer{Tensor2D(out, 3 * in), Tensor2D(out, 1)};
    const double bound = std::sqrt(6.0 / static_cast<double>(3 * in));
    layer.w.fill_uniform(rng, -bound, bound);
    return layer;
}

template <typename Model, typename Ptr>
std::vector<Ptr> collect(Model& m) {
    return {
        &m.dyn.phi_k.c1.w, &m.dyn.phi_k.c1.b, &m.dyn.phi_k.c2.w, &m.dyn.phi_k.c2.b,
        &m.dyn.phi_v.c1.w, &m.dyn.phi_v.c1.b, &m.dyn.phi_v.c2.w, &m.dyn.phi_v.c2.b,
        &m.dyn.classifier.w, &m.dyn.classifier.b,
        &m.stat.psi_k.w, &m.stat.psi_k.b, &m.stat.psi_v.w, &m.stat.psi_v.b,
        &m.stat.gamma_k.w, &m.stat.gamma_k.b, &m.stat.gamma_v.w, &m.stat.gamma_v.b,
        &m.stat.cat_attn.w, &m.stat.cat_attn.b,
        &m.stat.classifier.w, &m.stat.classifier.b,
    };
}

}  // namespace

std::vector<Tensor2D*> ModelParams::tensors() { return collect<ModelParams, Tensor2D*>(*this); }

std::vector<const Tensor2D*> ModelParams::tensors() const {
    return collect<const ModelParams, const Tensor2D*>(*this);
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto* t : tensors()) flat.insert(flat.end(), t->raw().begin(), t->raw().end());
    return flat;
}

void ModelParams::unflatten(const std::vector<double>& flat) {
    std::size_t off = 0;
    for (auto* t : tensors()) {
        if (off + t->size() > flat.size()) throw DimensionError("unflatten: vector too short");
        std::copy(flat.begin() + off, flat.begin() + off + t->size(), t->raw().begin());
        off += t->size();
    }
    if (off != flat.size()) throw DimensionError("unflatten: vector too long");
}

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
}

ModelParams init_model(std::size_t num_classes, std::size_t dim, const Hyper& hyper, Rng rng) {
    if (num_classes < 1 || dim < 1 || hyper.window < 1 || hyper.channels < 1 ||
        hyper.per_class < 1)
        throw ParameterError("init_model: counts must be positive");
    if (hyper.lambda < 0.0 || hyper.beta < 0.0 || hyper.beta > 1.0)
        throw ParameterError("init_model: need lambda >= 0 and beta in [0, 1]");

    ModelParams m;
    m.num_classes = num_classes;
    m.dim = dim;
    m.hyper = hyper;
    const std::size_t h = hyper.channels;
    const std::size_t out = num_classes + 1;

    m.dyn.phi_k.c1 = make_conv(h, dim, rng);
    m.dyn.phi_k.c2 = make_conv(h, h, rng);
    m.dyn.phi_v.c1 = make_conv(h, dim, rng);
    m.dyn.phi_v.c2 = make_conv(h, h, rng);
    m.dyn.classifier = make_linear(out, h, rng);

    m.stat.psi_k = make_linear(h, dim, rng);
    m.stat.psi_v = make_linear(h, dim, rng);
    m.stat.gamma_k = make_linear(h, dim, rng);
    m.stat.gamma_v = make_linear(h, dim, rng);
    m.stat.cat_attn = make_linear(1, h, rng);
    m.stat.classifier = make_linear(out, h, rng);
    return m;
}

ModelParams zeros_like(const ModelParams& model) {
    ModelParams z = model;
    for (auto* t : z.tensors()) t->fill(0.0);
    return z;
}

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open checkpoint for writing: " + tmp);
        out.write(kCkptMagic, 4);
        const uint32_t head[6] = {kCkptVersion,
                                  static_cast<uint32_t>(model.num_classes),
                                  static_cast<uint32_t>(model.dim),
                                  static_cast<uint32_t>(model.hyper.window),
                                  static_cast<uint32_t>(model.hyper.channels),
                                  static_cast<uint32_t>(model.hyper.per_class)};
        out.write(reinterpret_cast<const char*>(head), sizeof(head));
        out.write(reinterpret_cast<const char*>(&model.hyper.lambda), 8);
        out.write(reinterpret_cast<const char*>(&model.hyper.beta), 8);
        for (const auto* t : model.tensors()) {
            const uint32_t shape[2] = {static_cast<uint32_t>(t->rows()),
                                       static_cast<uint32_t>(t->cols())};
            out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
            out.write(reinterpret_cast<const char*>(t->data()),
                      static_cast<std::streamsize>(t->size() * 8));
        }
        if (!out) throw IoError("checkpoint write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw FormatError("bad checkpoint magic: " + path.string());
    uint32_t head[6];
    in.read(reinterpret_cast<char*>(head), sizeof(head));
    if (!in || head[0] != kCkptVersion)
        throw FormatError("unsupported checkpoint version: " + path.string());
    Hyper hyper;
    hyper.window = head[3];
    hyper.channels = head[4];
    hyper.per_class = head[5];
    in.read(reinterpret_cast<char*>(&hyper.lambda), 8);
    in.read(reinterpret_cast<char*>(&hyper.beta), 8);
    if (!in) throw FormatError("truncated checkpoint header: " + path.string());

    ModelParams model = init_model(head[1], head[2], hyper, Rng(0));
    for (auto* t : model.tensors()) {
        uint32_t shape[2];
        in.read(reinterpret_cast<char*>(shape), sizeof(shape));
        if (!in || shape[0] != t->rows() || shape[1] != t->cols())
            throw FormatError("checkpoint tensor shape mismatch: " + path.string());
        in.read(reinterpret_cast<char*>(t->data()), static_cast<std::streamsize>(t->size() * 8));
        if (!in) throw FormatError("truncated checkpoint payload: " + path.string());
    }
    return model;
}

}  // namespace colar
