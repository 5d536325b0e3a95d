#pragma once

// Comparison modules with the same feature-in, feature-out contract as ACM.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acm/acm_module.hpp"
#include "acm/tensor.hpp"

namespace acm {

// Squeeze-and-excitation: sigmoid(proj2(relu(proj1(mean(X))))) * X.
struct SeParams {
    Tensor proj1_w;  // [1, C/r, C]
    Tensor proj1_b;  // [C/r]
    Tensor proj2_w;  // [1, C, C/r]
    Tensor proj2_b;  // [C]

    std::vector<std::pair<std::string, Tensor*>> named(const std::string& prefix);
};

SeParams se_init(std::size_t channels, std::size_t ratio, std::uint64_t seed);

// Shares the recalibration weights of an ACM parameter set.
SeParams se_from_acm(const AcmParams& params);

Tensor se_forward(const Tensor& x, const SeParams& params);

inline Tensor identity_forward(const Tensor& x) { return x; }

}  // namespace acm
