#include <doctest.h>

#include <cmath>
#include <random>

#include "acm/hash.hpp"
#include "acm/tensor.hpp"
#include "oracles.hpp"

using namespace acm;

namespace {

Tensor t3(std::size_t c, std::size_t h, std::size_t w, std::vector<double> v, bool grad = false) {
    return Tensor::from(Shape{c, h, w}, std::move(v), grad);
}

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("shape rejects zero dims and reads rank-1 as a column") {
    CHECK_THROWS_AS(Shape({2, 0, 3}), std::invalid_argument);
    const Shape s{5};
    CHECK(s.channels() == 5);
    CHECK(s.plane() == 1);
    CHECK(Shape({2, 3, 4}).numel() == 24);
}

TEST_CASE("randn is deterministic and has the requested moments") {
    const Tensor a = randn(Shape{2, 2, 2}, 7, 1.0), b = randn(Shape{2, 2, 2}, 7, 1.0);
    CHECK(vec(a) == vec(b));
    CHECK_THROWS(randn(Shape{3}, 1, 0.0));
    for (std::uint64_t seed : {1, 2, 3}) {
        const Tensor x = randn(Shape{10000}, seed, 1.0);
        double m = 0.0, v = 0.0;
        for (double e : x.values()) m += e;
        m /= 10000.0;
        for (double e : x.values()) v += (e - m) * (e - m);
        const double sd = std::sqrt(v / 10000.0);
        CHECK(std::abs(m) < 0.05);
        CHECK(sd > 0.95);
        CHECK(sd < 1.05);
    }
}

TEST_CASE("elementwise ops and channel broadcast") {
    const Tensor x = randn(Shape{3, 2, 2}, 3, 1.0);
    const Tensor zero = sub(x, x);
    for (double v : zero.values()) CHECK(v == 0.0);

    const Tensor p = Tensor::from(Shape{3, 1, 1}, {2.0, -1.0, 0.5});
    const Tensor y = mul(p, x);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < 4; ++k) CHECK(y[c * 4 + k] == p[c] * x[c * 4 + k]);

    Tensor a = Tensor::from(Shape{1}, {2.0}, true), b = Tensor::from(Shape{1}, {3.0}, true);
    backward(mul(a, b));
    CHECK(a.grad()[0] == 3.0);
    CHECK(b.grad()[0] == 2.0);

    CHECK_THROWS_AS(add(Tensor::zeros(Shape{2, 2, 2}), Tensor::zeros(Shape{3, 2, 2})), std::invalid_argument);
}

TEST_CASE("grouped_channel_linear examples") {
    const Tensor x = randn(Shape{3, 2, 3}, 5, 1.0);
    std::vector<double> eye(9, 0.0);
    for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
    CHECK(vec(grouped_channel_linear(x, Tensor::from(Shape{1, 3, 3}, eye))) == vec(x));

    const Tensor x4 = randn(Shape{4, 2, 2}, 6, 1.0);
    const Tensor y = grouped_channel_linear(x4, Tensor::from(Shape{2, 1, 2}, {1, 1, 1, 1}));
    REQUIRE(y.shape() == Shape{2, 2, 2});
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t p = 0; p < 4; ++p) CHECK(y[g * 4 + p] == doctest::Approx(x4[2 * g * 4 + p] + x4[(2 * g + 1) * 4 + p]).epsilon(1e-15));

    CHECK_THROWS_AS(grouped_channel_linear(Tensor::zeros(Shape{5, 1, 1}), Tensor::zeros(Shape{2, 1, 2})),
                    std::invalid_argument);
}

TEST_CASE("grouped_channel_linear matches a dense block-diagonal matmul") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 100; ++i) {
        const std::size_t G = 1u << (rng() % 3), in_pg = 1 + rng() % 3, out_pg = 1 + rng() % 3;
        const std::size_t C = G * in_pg, H = 1 + rng() % 4, W = 1 + rng() % 4;
        const Tensor x = randn(Shape{C, H, W}, rng(), 1.0);
        const Tensor w = randn(Shape{G, out_pg, in_pg}, rng(), 1.0);
        const Tensor b = randn(Shape{G * out_pg}, rng(), 1.0);
        const Tensor y = grouped_channel_linear(x, w, b);
        const oracle::Vec bv = oracle::copy(b);
        const auto ref = oracle::dense_grouped_linear(oracle::copy(x), C, H * W, oracle::copy(w), G, out_pg, &bv);
        CHECK(oracle::max_abs_diff(y.values(), ref) <= 1e-12);
    }
    // The fixed C=8, G=4 instance.
    const Tensor x = randn(Shape{8, 3, 3}, 21, 1.0), w = randn(Shape{4, 2, 2}, 22, 1.0);
    const auto ref = oracle::dense_grouped_linear(oracle::copy(x), 8, 9, oracle::copy(w), 4, 2);
    CHECK(oracle::max_abs_diff(grouped_channel_linear(x, w).values(), ref) <= 1e-12);
}

TEST_CASE("spatial_softmax examples") {
    const Tensor flat = spatial_softmax(Tensor::full(Shape{1, 2, 2}, 3.0));
    for (double v : flat.values()) CHECK(v == doctest::Approx(0.25));
    const Tensor s = spatial_softmax(t3(1, 2, 2, {0, 0, 0, std::log(3.0)}));
    CHECK(s[0] == doctest::Approx(1.0 / 6));
    CHECK(s[1] == doctest::Approx(1.0 / 6));
    CHECK(s[2] == doctest::Approx(1.0 / 6));
    CHECK(s[3] == doctest::Approx(0.5));
    // Large logits do not overflow.
    const Tensor big = spatial_softmax(t3(1, 1, 2, {1000.0, 1000.0}));
    CHECK(big[0] == doctest::Approx(0.5));
    CHECK_THROWS(spatial_softmax(t3(1, 1, 2, {NAN, 0.0})));
}

TEST_CASE("weighted_spatial_sum examples") {
    const Tensor x = randn(Shape{4, 2, 3}, 8, 1.0);
    const Tensor u = Tensor::full(Shape{2, 2, 3}, 1.0 / 6.0);
    CHECK(oracle::max_abs_diff(weighted_spatial_sum(x, u, 2).values(), spatial_mean(x).values()) <= 1e-15);

    std::vector<double> onehot(12, 0.0);
    onehot[4] = onehot[6 + 4] = 1.0;
    const Tensor k = weighted_spatial_sum(x, t3(2, 2, 3, onehot), 2);
    for (std::size_t c = 0; c < 4; ++c) CHECK(k[c] == x[c * 6 + 4]);

    const Tensor xs = t3(1, 2, 2, {0, 0, 0, std::log(3.0)});
    const Tensor kk = weighted_spatial_sum(xs, spatial_softmax(xs), 1);
    CHECK(kk.item() == doctest::Approx(std::log(3.0) / 2).epsilon(1e-12));
    CHECK(kk.item() == doctest::Approx(0.5493).epsilon(1e-4));
}

TEST_CASE("spatial_mean examples") {
    const Tensor mu = spatial_mean(Tensor::full(Shape{3, 2, 2}, -1.5));
    for (double v : mu.values()) CHECK(v == -1.5);
    CHECK(spatial_mean(t3(1, 2, 2, {1, 2, 3, 4})).item() == 2.5);
    const Tensor a = t3(1, 2, 2, {1, 7, -2, 4}), b = t3(1, 2, 2, {4, -2, 1, 7});
    CHECK(spatial_mean(a).item() == spatial_mean(b).item());
}

TEST_CASE("relu and sigmoid examples") {
    CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
    CHECK(sigmoid(Tensor::scalar(std::log(3.0))).item() == doctest::Approx(0.75).epsilon(1e-15));
    Tensor x = Tensor::from(Shape{1}, {-2.0}, true);
    const Tensor r = relu(x);
    CHECK(r.item() == 0.0);
    backward(r);
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("global pools") {
    CHECK(global_max_pool(t3(1, 1, 1, {4.5})).item() == 4.5);
    const Tensor m = t3(1, 2, 2, {-1, 5, 2, 0});
    CHECK(global_max_pool(m).item() == 5.0);
    CHECK(global_avg_pool(m).item() == 1.5);

    Tensor c = Tensor::full(Shape{1, 2, 2}, 3.0, true);
    const Tensor mx = global_max_pool(c);
    CHECK(mx.item() == 3.0);
    backward(mx);
    CHECK(vec(Tensor::from(Shape{4}, {c.grad().begin(), c.grad().end()})) == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("dot examples") {
    CHECK(dot(Tensor::from(Shape{2}, {1, 0}), Tensor::from(Shape{2}, {0, 1})).item() == 0.0);
    CHECK(dot(Tensor::from(Shape{2}, {1, 1}), Tensor::from(Shape{2}, {1, 1})).item() == 2.0);
    CHECK(dot(Tensor::from(Shape{2}, {2, -1}), Tensor::from(Shape{2}, {1, 3})).item() == -1.0);
    CHECK_THROWS(dot(Tensor::zeros(Shape{2}), Tensor::zeros(Shape{3})));
}

TEST_CASE("bce_loss examples") {
    CHECK(bce_loss(Tensor::scalar(0.5), 1).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bce_loss(Tensor::scalar(0.9), 1).item() == doctest::Approx(0.10536).epsilon(1e-4));
    CHECK(bce_loss(Tensor::scalar(1.0), 1).item() <= -std::log(1.0 - kBceEpsilon) + 1e-15);
    CHECK(bce_loss(Tensor::scalar(0.0), 0).item() <= -std::log(1.0 - kBceEpsilon) + 1e-15);
    CHECK_THROWS(bce_loss(Tensor::scalar(0.5), 2));
}

TEST_CASE("backward examples") {
    Tensor x = Tensor::from(Shape{1}, {3.0}, true);
    backward(dot(x, x));
    CHECK(x.grad()[0] == 6.0);

    Tensor y = Tensor::from(Shape{1}, {1.5}, true);
    backward(add(y, y));
    CHECK(y.grad()[0] == 2.0);

    CHECK_THROWS(backward(Tensor::zeros(Shape{2}, true)));
}

TEST_CASE("no-grad guard produces constant results") {
    Tensor x = randn(Shape{2, 2, 2}, 1, 1.0, true);
    {
        NoGradGuard ng;
        CHECK_FALSE(relu(x).requires_grad());
        CHECK_FALSE(grad_enabled());
    }
    CHECK(grad_enabled());
    CHECK(relu(x).requires_grad());
}

TEST_CASE("gradcheck examples") {
    Tensor x = Tensor::from(Shape{1}, {3.0}, true);
    const auto rep = gradcheck([&] { return dot(x, x); }, x, 1e-5, 1e-8);
    CHECK(rep.passed);
    CHECK(rep.max_abs_error < 1e-8);

    Tensor z = Tensor::from(Shape{3}, {1, 2, 3}, true);
    const auto flat = gradcheck([&] { return Tensor::scalar(4.0); }, z, 1e-5, 1e-12);
    CHECK(flat.passed);
    CHECK(flat.max_abs_error == 0.0);
}

TEST_CASE("every differentiable op passes gradcheck on random inputs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Tensor x = randn(Shape{4, 3, 2}, mix_seed(seed, 1), 1.0, true);
        const Tensor w = randn(Shape{2, 3, 2}, mix_seed(seed, 2), 1.0);
        const Tensor t = randn(Shape{6, 3, 2}, mix_seed(seed, 3), 1.0);
        const Tensor p = randn(Shape{4, 1, 1}, mix_seed(seed, 4), 1.0);
        auto f = [&] {
            const Tensor h = channel_norm(sigmoid(grouped_channel_linear(x, w)));
            const Tensor a = spatial_softmax(grouped_channel_linear(x, Tensor::from(Shape{2, 1, 2}, {0.5, -1, 2, 1})));
            const Tensor k = weighted_spatial_sum(x, a, 2);
            const Tensor y = mul(p, add(x, sub(k, spatial_mean(x))));
            return add(add(dot(h, t), dot(relu(y), y)),
                       add(dot(global_max_pool(scale(y, 0.3)), Tensor::full(Shape{4}, 1.0)), dot(global_avg_pool(y), k)));
        };
        const auto rep = gradcheck(f, x, 1e-5, 1e-6);
        CHECK_MESSAGE(rep.passed, "seed " << seed << " rel err " << rep.max_rel_error);
    }
}

TEST_CASE("channel_norm normalizes each location across channels") {
    const Tensor x = randn(Shape{6, 2, 3}, 4, 3.0);
    const Tensor y = channel_norm(x);
    for (std::size_t p = 0; p < 6; ++p) {
        double m = 0.0, v = 0.0;
        for (std::size_t c = 0; c < 6; ++c) m += y[c * 6 + p];
        m /= 6.0;
        for (std::size_t c = 0; c < 6; ++c) v += (y[c * 6 + p] - m) * (y[c * 6 + p] - m);
        CHECK(std::abs(m) < 1e-12);
        CHECK(v / 6.0 == doctest::Approx(1.0).epsilon(1e-5));
    }
    const Tensor z = channel_norm(Tensor::zeros(Shape{3, 2, 2}));
    for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("bce gradient through sigmoid is prob minus label") {
    for (int label : {0, 1}) {
        Tensor z = Tensor::from(Shape{1}, {0.7}, true);
        const Tensor prob = sigmoid(z);
        backward(bce_loss(prob, label));
        CHECK(z.grad()[0] == doctest::Approx(prob.item() - label).epsilon(1e-12));
    }
}
