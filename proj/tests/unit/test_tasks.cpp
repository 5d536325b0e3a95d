#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "acm/tasks.hpp"
#include "oracles.hpp"

using namespace acm;

namespace {

TaskSpec spec(TaskKind kind) {
    TaskSpec s;
    s.kind = kind;
    s.train_size = 1000;
    s.val_size = 200;
    s.test_size = 200;
    return s;
}

// Two filled disks painted by hand, no noise.
SyntheticSample two_disks(double left, double right) {
    const std::size_t S = 32;
    std::vector<double> px(S * S, 0.0);
    SyntheticSample s;
    s.mask_a.assign(S * S, 0);
    s.mask_b.assign(S * S, 0);
    for (std::size_t y = 0; y < S; ++y)
        for (std::size_t x = 0; x < S; ++x) {
            const auto d2 = [&](double cy, double cx) { return (y - cy) * (y - cy) + (x - cx) * (x - cx); };
            if (d2(16, 8) <= 16) {
                px[y * S + x] = left;
                s.mask_a[y * S + x] = 1;
            }
            if (d2(16, 24) <= 16) {
                px[y * S + x] = right;
                s.mask_b[y * S + x] = 1;
            }
        }
    s.image = Tensor::from(Shape{1, S, S}, std::move(px));
    return s;
}

}  // namespace

TEST_CASE("samples are deterministic per index") {
    for (auto kind : {TaskKind::brightness_pair, TaskKind::presence_pair}) {
        const TaskSpec s = spec(kind);
        const SyntheticSample a = gen_sample(s, 17), b = gen_sample(s, 17);
        CHECK(oracle::copy(a.image) == oracle::copy(b.image));
        CHECK(a.label == b.label);
        CHECK(a.mask_a == b.mask_a);
        CHECK(image_hash(a) != image_hash(gen_sample(s, 18)));
    }
}

TEST_CASE("brightness rule by construction") {
    CHECK(recompute_label(TaskKind::brightness_pair, two_disks(0.9, 0.3), 0.1) == 1);
    CHECK(recompute_label(TaskKind::brightness_pair, two_disks(0.3, 0.9), 0.1) == 0);
    CHECK(recompute_label(TaskKind::brightness_pair, two_disks(0.5, 0.45), 0.1) == 0);
}

TEST_CASE("generated labels agree with the pixels") {
    for (auto kind : {TaskKind::brightness_pair, TaskKind::presence_pair}) {
        const TaskSpec s = spec(kind);
        for (std::size_t i = 0; i < 300; ++i) {
            const SyntheticSample x = gen_sample(s, i);
            CHECK(recompute_label(kind, x, s.delta) == x.label);
            for (double v : oracle::copy(x.image)) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            if (kind == TaskKind::brightness_pair) {
                const double gap = masked_mean(x, x.mask_a) - masked_mean(x, x.mask_b);
                CHECK(std::abs(gap) > s.delta);
            }
        }
    }
}

TEST_CASE("brightness disks sit in opposite halves") {
    const TaskSpec s = spec(TaskKind::brightness_pair);
    for (std::size_t i = 0; i < 100; ++i) {
        const SyntheticSample x = gen_sample(s, i);
        for (std::size_t k = 0; k < x.mask_a.size(); ++k) {
            if (x.mask_a[k]) CHECK(k % 32 < 16);
            if (x.mask_b[k]) CHECK(k % 32 >= 16);
        }
    }
}

TEST_CASE("presence: the disk is always there, the ring half the time, never overlapping") {
    const TaskSpec s = spec(TaskKind::presence_pair);
    for (std::size_t i = 0; i < 200; ++i) {
        const SyntheticSample x = gen_sample(s, i);
        CHECK(std::count(x.mask_a.begin(), x.mask_a.end(), 1) > 0);
        const bool ring = std::count(x.mask_b.begin(), x.mask_b.end(), 1) > 0;
        CHECK(x.label == (ring ? 0 : 1));
        for (std::size_t k = 0; k < x.mask_a.size(); ++k) CHECK(!(x.mask_a[k] && x.mask_b[k]));
    }
}

TEST_CASE("labels are balanced over 10000 samples") {
    for (auto kind : {TaskKind::brightness_pair, TaskKind::presence_pair}) {
        TaskSpec s = spec(kind);
        s.train_size = 10000;
        const Dataset d = gen_split(s, Split::train);
        const double pos = static_cast<double>(std::count_if(d.begin(), d.end(), [](const auto& x) { return x.label == 1; }));
        CHECK_MESSAGE(pos / 10000.0 >= 0.48, to_string(kind));
        CHECK_MESSAGE(pos / 10000.0 <= 0.52, to_string(kind));
    }
}

TEST_CASE("splits have the requested sizes and share no image") {
    const TaskSpec s = spec(TaskKind::presence_pair);
    const Dataset tr = gen_split(s, Split::train), va = gen_split(s, Split::val), te = gen_split(s, Split::test);
    CHECK(tr.size() == 1000);
    CHECK(va.size() == 200);
    CHECK(te.size() == 200);
    std::set<std::uint64_t> train_hashes;
    for (const auto& x : tr) train_hashes.insert(image_hash(x));
    for (const auto& x : te) CHECK(train_hashes.count(image_hash(x)) == 0);
    for (const auto& x : va) CHECK(train_hashes.count(image_hash(x)) == 0);
    // Split offsets are global indices.
    CHECK(oracle::copy(te[3].image) == oracle::copy(gen_sample(s, 1000 + 200 + 3).image));
}

TEST_CASE("task settings validation and names") {
    TaskSpec s;
    s.image_size = 12;
    CHECK_THROWS(s.validate());
    s = TaskSpec{};
    s.delta = 0.0;
    CHECK_THROWS(s.validate());
    for (auto k : {TaskKind::brightness_pair, TaskKind::presence_pair}) CHECK(parse_task_kind(to_string(k)) == k);
    CHECK_THROWS(parse_task_kind("parity"));
}
