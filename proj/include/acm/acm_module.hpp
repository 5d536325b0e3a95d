#pragma once

// Attend-and-Compare Module.
//
//   mu     = spatial mean of X                     (C x 1 x 1)
//   Xn     = X - mu
//   K, Q   = attention-pooled Xn, one softmax map per channel group
//   P      = sigmoid(rec2(relu(rec1(mu))))
//   Y      = P * (X + (K - Q))                      (full variant)
//
// The comparison term is added to the original X, not to Xn.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acm/tensor.hpp"

namespace acm {

enum class AcmVariant {
    full,          // P(X + (K - Q))
    diff_only,     // X + (K - Q)
    recal_only,    // P X
    k_plus_recal,  // P(X + K)
};

std::string_view to_string(AcmVariant v);
AcmVariant parse_acm_variant(std::string_view s);

struct AcmConfig {
    std::size_t channels = 16;
    std::size_t groups = 4;
    std::size_t bottleneck_ratio = 16;
    double lambda = 0.1;
    AcmVariant variant = AcmVariant::full;

    std::size_t hidden() const { return channels / bottleneck_ratio; }
    // Throws std::invalid_argument when C % G != 0, C / r < 1 or lambda < 0.
    void validate() const;
};

struct AcmParams {
    Tensor w_k;     // [G, 1, C/G], no bias
    Tensor w_q;     // [G, 1, C/G], no bias
    Tensor rec1_w;  // [1, C/r, C]
    Tensor rec1_b;  // [C/r]
    Tensor rec2_w;  // [1, C, C/r]
    Tensor rec2_b;  // [C]

    std::vector<std::pair<std::string, Tensor*>> named(const std::string& prefix);
};

struct AcmOutputs {
    Tensor y;
    Tensor k, q, p, mu;      // C x 1 x 1
    Tensor attn_k, attn_q;   // G x H x W
    Tensor orth;             // [1], dot(K, Q) / C
};

// W_K from seed, W_Q from seed + 1, rec1 from seed + 2, rec2 from seed + 3.
// Weights ~ N(0, 1/fan_in); biases zero.
AcmParams acm_init(const AcmConfig& config, std::uint64_t seed);

// Attention-pooled group vectors of a mean-subtracted feature.
std::pair<Tensor, Tensor> compute_kq(const Tensor& x_norm, const Tensor& w, std::size_t groups);

Tensor compute_p(const Tensor& mu, const AcmParams& params);

AcmOutputs acm_forward(const Tensor& x, const AcmParams& params, const AcmConfig& config);

// Signed dot(K, Q) / C.
Tensor orth_loss(const Tensor& k, const Tensor& q);

// task + lambda * sum of every module's orth term.
Tensor total_loss(const Tensor& task_loss, std::span<const AcmOutputs> outputs, double lambda);

}  // namespace acm
