#include <doctest.h>

#include "acm/baselines.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace acm;

TEST_CASE("se with zero weights halves the input") {
    SeParams p = se_init(8, 4, 1);
    for (auto& [name, t] : p.named("")) *t = Tensor::zeros(t->shape());
    const Tensor x = randn(Shape{8, 3, 3}, 2, 1.0);
    const Tensor y = se_forward(x, p);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == 0.5 * x[i]);
}

TEST_CASE("se contracts every channel") {
    const Tensor x = randn(Shape{8, 4, 4}, 3, 2.0);
    const Tensor y = se_forward(x, se_init(8, 2, 4));
    for (std::size_t c = 0; c < 8; ++c) {
        double nx = 0.0, ny = 0.0;
        for (std::size_t p = 0; p < 16; ++p) {
            nx += x[c * 16 + p] * x[c * 16 + p];
            ny += y[c * 16 + p] * y[c * 16 + p];
        }
        CHECK(ny <= nx);
    }
}

TEST_CASE("se equals the recal_only ACM under shared weights") {
    for (int i = 0; i < gen::kCases; ++i) {
        gen::AcmCase c = gen::acm_case(static_cast<std::uint64_t>(i + 900), AcmVariant::recal_only);
        const Tensor se = se_forward(c.x, se_from_acm(c.params));
        CHECK(oracle::max_abs_diff(se.values(), acm_forward(c.x, c.params, c.config).y.values()) <= 1e-10);
    }
}

TEST_CASE("identity passes its input through") {
    const Tensor x = randn(Shape{2, 2, 2}, 9, 1.0);
    CHECK(identity_forward(x).node() == x.node());
}

TEST_CASE("se rejects a channel mismatch") {
    CHECK_THROWS(se_forward(Tensor::zeros(Shape{4, 2, 2}), se_init(8, 2, 1)));
}
