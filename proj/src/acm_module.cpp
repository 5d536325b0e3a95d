#include "acm/acm_module.hpp"

#include <cmath>
#include <stdexcept>

namespace acm {

std::string_view to_string(AcmVariant v) {
    switch (v) {
        case AcmVariant::full: return "full";
        case AcmVariant::diff_only: return "diff_only";
        case AcmVariant::recal_only: return "recal_only";
        case AcmVariant::k_plus_recal: return "k_plus_recal";
    }
    return "?";
}

AcmVariant parse_acm_variant(std::string_view s) {
    if (s == "full") return AcmVariant::full;
    if (s == "diff_only") return AcmVariant::diff_only;
    if (s == "recal_only") return AcmVariant::recal_only;
    if (s == "k_plus_recal") return AcmVariant::k_plus_recal;
    throw std::invalid_argument("unknown ACM variant '" + std::string(s) + "'");
}

void AcmConfig::validate() const {
    if (channels == 0 || groups == 0 || bottleneck_ratio == 0)
        throw std::invalid_argument("AcmConfig: channels, groups and ratio must be positive");
    if (channels % groups != 0)
        throw std::invalid_argument("AcmConfig: channels " + std::to_string(channels) +
                                    " not divisible by groups " + std::to_string(groups));
    if (channels / bottleneck_ratio < 1)
        throw std::invalid_argument("AcmConfig: channels / ratio must be at least 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("AcmConfig: lambda must be >= 0");
}

std::vector<std::pair<std::string, Tensor*>> AcmParams::named(const std::string& prefix) {
    return {{prefix + "w_k", &w_k},       {prefix + "w_q", &w_q},
            {prefix + "rec1_w", &rec1_w}, {prefix + "rec1_b", &rec1_b},
            {prefix + "rec2_w", &rec2_w}, {prefix + "rec2_b", &rec2_b}};
}

AcmParams acm_init(const AcmConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t C = config.channels, G = config.groups, hidden = config.hidden();
    const double attn_std = 1.0 / std::sqrt(static_cast<double>(C / G));
    AcmParams p;
    p.w_k = randn(Shape{G, 1, C / G}, seed, attn_std, true);
    p.w_q = randn(Shape{G, 1, C / G}, seed + 1, attn_std, true);
    p.rec1_w = randn(Shape{1, hidden, C}, seed + 2, 1.0 / std::sqrt(static_cast<double>(C)), true);
    p.rec1_b = Tensor::zeros(Shape{hidden}, true);
    p.rec2_w = randn(Shape{1, C, hidden}, seed + 3, 1.0 / std::sqrt(static_cast<double>(hidden)), true);
    p.rec2_b = Tensor::zeros(Shape{C}, true);
    return p;
}

std::pair<Tensor, Tensor> compute_kq(const Tensor& x_norm, const Tensor& w, std::size_t groups) {
    Tensor logits = grouped_channel_linear(x_norm, w);
    Tensor attn = spatial_softmax(logits);
    Tensor pooled = weighted_spatial_sum(x_norm, attn, groups);
    return {pooled, attn};
}

Tensor compute_p(const Tensor& mu, const AcmParams& params) {
    Tensor hidden = relu(grouped_channel_linear(mu, params.rec1_w, params.rec1_b));
    return sigmoid(grouped_channel_linear(hidden, params.rec2_w, params.rec2_b));
}

AcmOutputs acm_forward(const Tensor& x, const AcmParams& params, const AcmConfig& config) {
    config.validate();
    if (!x.shape().is_chw() || x.shape().channels() != config.channels)
        throw std::invalid_argument("acm_forward: input " + x.shape().str() + " does not have " +
                                    std::to_string(config.channels) + " channels");
    AcmOutputs out;
    out.mu = spatial_mean(x);
    Tensor x_norm = sub(x, out.mu);
    std::tie(out.k, out.attn_k) = compute_kq(x_norm, params.w_k, config.groups);
    std::tie(out.q, out.attn_q) = compute_kq(x_norm, params.w_q, config.groups);
    out.p = compute_p(out.mu, params);
    switch (config.variant) {
        case AcmVariant::full: out.y = mul(out.p, add(x, sub(out.k, out.q))); break;
        case AcmVariant::diff_only: out.y = add(x, sub(out.k, out.q)); break;
        case AcmVariant::recal_only: out.y = mul(out.p, x); break;
        case AcmVariant::k_plus_recal: out.y = mul(out.p, add(x, out.k)); break;
    }
    out.orth = orth_loss(out.k, out.q);
    return out;
}

Tensor orth_loss(const Tensor& k, const Tensor& q) {
    if (k.numel() != q.numel()) throw std::invalid_argument("orth_loss: K and Q lengths differ");
    // Divides rather than scales by 1/C so the value is exactly dot(K, Q) / C.
    const double c = static_cast<double>(k.numel());
    const double value = dot(k, q).item() / c;
    return make_op("orth_loss", Shape{1}, {value}, {k, q}, [c](Node& self) {
        const double g = self.grad[0] / c;
        const std::size_t n = self.inputs[0]->value.size();
        if (double* gk = self.input_grad(0))
            for (std::size_t i = 0; i < n; ++i) gk[i] += g * self.input_value(1)[i];
        if (double* gq = self.input_grad(1))
            for (std::size_t i = 0; i < n; ++i) gq[i] += g * self.input_value(0)[i];
    });
}

Tensor total_loss(const Tensor& task_loss, std::span<const AcmOutputs> outputs, double lambda) {
    if (outputs.empty() || lambda == 0.0) return task_loss;
    Tensor orth_sum = outputs[0].orth;
    for (std::size_t m = 1; m < outputs.size(); ++m) orth_sum = add(orth_sum, outputs[m].orth);
    return add(task_loss, scale(orth_sum, lambda));
}

}  // namespace acm
