#include "acm/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace acm {

std::vector<std::pair<std::string, Tensor*>> SeParams::named(const std::string& prefix) {
    return {{prefix + "proj1_w", &proj1_w},
            {prefix + "proj1_b", &proj1_b},
            {prefix + "proj2_w", &proj2_w},
            {prefix + "proj2_b", &proj2_b}};
}

SeParams se_init(std::size_t channels, std::size_t ratio, std::uint64_t seed) {
    if (ratio == 0 || channels / ratio < 1)
        throw std::invalid_argument("se_init: channels / ratio must be at least 1");
    const std::size_t hidden = channels / ratio;
    SeParams p;
    p.proj1_w = randn(Shape{1, hidden, channels}, seed + 2,
                      1.0 / std::sqrt(static_cast<double>(channels)), true);
    p.proj1_b = Tensor::zeros(Shape{hidden}, true);
    p.proj2_w = randn(Shape{1, channels, hidden}, seed + 3,
                      1.0 / std::sqrt(static_cast<double>(hidden)), true);
    p.proj2_b = Tensor::zeros(Shape{channels}, true);
    return p;
}

SeParams se_from_acm(const AcmParams& params) {
    return SeParams{params.rec1_w, params.rec1_b, params.rec2_w, params.rec2_b};
}

Tensor se_forward(const Tensor& x, const SeParams& params) {
    if (!x.shape().is_chw() || x.shape().channels() != params.proj2_b.numel())
        throw std::invalid_argument("se_forward: input " + x.shape().str() +
                                    " does not match parameters");
    Tensor squeezed = spatial_mean(x);
    Tensor hidden = relu(grouped_channel_linear(squeezed, params.proj1_w, params.proj1_b));
    Tensor gate = sigmoid(grouped_channel_linear(hidden, params.proj2_w, params.proj2_b));
    return mul(gate, x);
}

}  // namespace acm
