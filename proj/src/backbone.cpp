#include "acm/backbone.hpp"

#include <cmath>
#include <stdexcept>

#include "acm/hash.hpp"

namespace acm {

std::string_view to_string(ModuleKind k) {
    switch (k) {
        case ModuleKind::none: return "none";
        case ModuleKind::se: return "se";
        case ModuleKind::acm: return "acm";
    }
    return "?";
}

std::string_view to_string(HeadPool h) { return h == HeadPool::max ? "max" : "avg"; }

ModuleKind parse_module_kind(std::string_view s) {
    if (s == "none") return ModuleKind::none;
    if (s == "se") return ModuleKind::se;
    if (s == "acm") return ModuleKind::acm;
    throw std::invalid_argument("unknown module kind '" + std::string(s) + "'");
}

HeadPool parse_head_pool(std::string_view s) {
    if (s == "max") return HeadPool::max;
    if (s == "avg") return HeadPool::avg;
    throw std::invalid_argument("unknown head pool '" + std::string(s) + "'");
}

AcmConfig BackboneConfig::stage_acm(std::size_t stage) const {
    AcmConfig c = acm;
    c.channels = widths.at(stage);
    return c;
}

void BackboneConfig::validate() const {
    if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0)
        throw std::invalid_argument("BackboneConfig: image_size must be divisible by patch_size");
    if (widths.empty()) throw std::invalid_argument("BackboneConfig: widths must be non-empty");
    for (std::size_t s = 0; s < widths.size(); ++s) {
        if (widths[s] == 0) throw std::invalid_argument("BackboneConfig: widths must be positive");
        if (module_kind != ModuleKind::none) stage_acm(s).validate();
    }
}

namespace {

std::vector<std::pair<std::string, Tensor*>> collect(ModelParams& p) {
    std::vector<std::pair<std::string, Tensor*>> out;
    if (p.pos_w.defined()) out.emplace_back("pos_w", &p.pos_w);
    for (std::size_t s = 0; s < p.stages.size(); ++s) {
        auto& st = p.stages[s];
        const std::string prefix = "stage" + std::to_string(s) + ".";
        out.emplace_back(prefix + "mix_w", &st.mix_w);
        out.emplace_back(prefix + "mix_b", &st.mix_b);
        if (st.acm)
            for (auto& e : st.acm->named(prefix + "acm.")) out.push_back(e);
        if (st.se)
            for (auto& e : st.se->named(prefix + "se.")) out.push_back(e);
    }
    out.emplace_back("cls_w", &p.cls_w);
    out.emplace_back("cls_b", &p.cls_b);
    return out;
}

double he_std(std::size_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

}  // namespace

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() { return collect(*this); }

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
    auto mut = collect(const_cast<ModelParams&>(*this));
    return {mut.begin(), mut.end()};
}

ModelParams ModelParams::clone() const {
    ModelParams copy = *this;
    for (auto& [name, t] : copy.named()) *t = t->detach(true);
    return copy;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named()) n += t->numel();
    return n;
}

ModelParams model_init(const BackboneConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t in0 = config.patch_size * config.patch_size;
    ModelParams p;
    std::uint64_t tag = 0;
    auto next_seed = [&] { return mix_seed(seed, ++tag); };

    if (config.coord_channels)
        p.pos_w = randn(Shape{1, config.widths[0], 2}, next_seed(), he_std(2), true);
    for (std::size_t s = 0; s < config.widths.size(); ++s) {
        const std::size_t in = s == 0 ? in0 : config.widths[s - 1];
        StageParams st;
        st.mix_w = randn(Shape{1, config.widths[s], in}, next_seed(), he_std(in), true);
        st.mix_b = Tensor::zeros(Shape{config.widths[s]}, true);
        const std::uint64_t module_seed = next_seed();
        if (config.module_kind == ModuleKind::acm)
            st.acm = acm_init(config.stage_acm(s), module_seed);
        else if (config.module_kind == ModuleKind::se)
            st.se = se_init(config.widths[s], config.acm.bottleneck_ratio, module_seed);
        p.stages.push_back(std::move(st));
    }
    const std::size_t last = config.widths.back();
    p.cls_w = randn(Shape{1, 1, last}, next_seed(), 1.0 / std::sqrt(static_cast<double>(last)), true);
    p.cls_b = Tensor::zeros(Shape{1}, true);
    return p;
}

Tensor patchify(const Tensor& image, std::size_t patch_size) {
    const Shape& s = image.shape();
    if (s.rank() != 3 || s[0] != 1 || s[1] != s[2])
        throw std::invalid_argument("patchify: expected [1,S,S] image, got " + s.str());
    const std::size_t S = s[1], p = patch_size;
    if (p == 0 || S % p != 0)
        throw std::invalid_argument("patchify: image size " + std::to_string(S) +
                                    " not divisible by patch size " + std::to_string(p));
    const std::size_t g = S / p, plane = g * g;
    // out[(di*p + dj), bi, bj] = image[bi*p + di, bj*p + dj]
    std::vector<std::size_t> src(p * p * plane);
    for (std::size_t di = 0; di < p; ++di)
        for (std::size_t dj = 0; dj < p; ++dj)
            for (std::size_t bi = 0; bi < g; ++bi)
                for (std::size_t bj = 0; bj < g; ++bj)
                    src[(di * p + dj) * plane + bi * g + bj] = (bi * p + di) * S + bj * p + dj;
    std::vector<double> out(src.size());
    for (std::size_t k = 0; k < src.size(); ++k) out[k] = image[src[k]];
    return make_op("patchify", Shape{p * p, g, g}, std::move(out), {image},
                   [src = std::move(src)](Node& self) {
                       double* gx = self.input_grad(0);
                       for (std::size_t k = 0; k < src.size(); ++k) gx[src[k]] += self.grad[k];
                   });
}

Tensor unpatchify(const Tensor& patches, std::size_t patch_size) {
    const Shape& s = patches.shape();
    const std::size_t p = patch_size;
    if (s.rank() != 3 || s[0] != p * p || s[1] != s[2])
        throw std::invalid_argument("unpatchify: shape " + s.str() + " is not a patch grid");
    const std::size_t g = s[1], S = g * p, plane = g * g;
    std::vector<double> out(S * S);
    for (std::size_t di = 0; di < p; ++di)
        for (std::size_t dj = 0; dj < p; ++dj)
            for (std::size_t bi = 0; bi < g; ++bi)
                for (std::size_t bj = 0; bj < g; ++bj)
                    out[(bi * p + di) * S + bj * p + dj] =
                        patches[(di * p + dj) * plane + bi * g + bj];
    return Tensor::from(Shape{1, S, S}, std::move(out));
}

Tensor coordinate_map(std::size_t grid) {
    std::vector<double> v(2 * grid * grid);
    const double n = static_cast<double>(grid);
    for (std::size_t i = 0; i < grid; ++i)
        for (std::size_t j = 0; j < grid; ++j) {
            v[i * grid + j] = (2.0 * static_cast<double>(j) + 1.0) / n - 1.0;
            v[grid * grid + i * grid + j] = (2.0 * static_cast<double>(i) + 1.0) / n - 1.0;
        }
    return Tensor::from(Shape{2, grid, grid}, std::move(v));
}

ModelOutputs model_forward(const Tensor& image, const ModelParams& params,
                           const BackboneConfig& config) {
    if (image.shape() != Shape{1, config.image_size, config.image_size})
        throw std::invalid_argument("model_forward: image " + image.shape().str() +
                                    " does not match image_size " +
                                    std::to_string(config.image_size));
    if (params.stages.size() != config.widths.size())
        throw std::invalid_argument("model_forward: parameter stages do not match config");

    ModelOutputs out;
    Tensor h = patchify(image, config.patch_size);
    for (std::size_t s = 0; s < params.stages.size(); ++s) {
        const StageParams& st = params.stages[s];
        Tensor mixed = grouped_channel_linear(h, st.mix_w, st.mix_b);
        if (s == 0 && config.coord_channels)
            mixed = add(mixed, grouped_channel_linear(coordinate_map(config.grid()), params.pos_w));
        if (config.channel_norm) mixed = channel_norm(mixed);
        h = relu(mixed);
        switch (config.module_kind) {
            case ModuleKind::none: h = identity_forward(h); break;
            case ModuleKind::se: h = se_forward(h, *st.se); break;
            case ModuleKind::acm: {
                AcmOutputs a = acm_forward(h, *st.acm, config.stage_acm(s));
                h = a.y;
                out.acm.push_back(std::move(a));
                break;
            }
        }
    }
    out.score_map = grouped_channel_linear(h, params.cls_w, params.cls_b);
    Tensor pooled = config.head_pool == HeadPool::max ? global_max_pool(out.score_map)
                                                      : global_avg_pool(out.score_map);
    out.logit = pooled;
    return out;
}

}  // namespace acm
