#include "acm/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "acm/hash.hpp"
#include "binio.hpp"

namespace acm {

std::string_view to_string(TaskKind k) {
    return k == TaskKind::brightness_pair ? "brightness_pair" : "presence_pair";
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

TaskKind parse_task_kind(std::string_view s) {
    if (s == "brightness_pair") return TaskKind::brightness_pair;
    if (s == "presence_pair") return TaskKind::presence_pair;
    throw std::invalid_argument("unknown task kind '" + std::string(s) + "'");
}

void TaskSpec::validate() const {
    if (radius < 1) throw std::invalid_argument("TaskSpec: radius must be >= 1");
    if (!(delta > 0.0)) throw std::invalid_argument("TaskSpec: delta must be > 0");
    if (!(noise >= 0.0)) throw std::invalid_argument("TaskSpec: noise must be >= 0");
    if (train_size == 0 || val_size == 0 || test_size == 0)
        throw std::invalid_argument("TaskSpec: split sizes must be > 0");
    // Two disks of this radius must fit side by side in separate halves.
    if (image_size < 4 * radius + 4)
        throw std::invalid_argument("TaskSpec: image_size too small for radius");
}

std::size_t TaskSpec::split_offset(Split s) const {
    switch (s) {
        case Split::train: return 0;
        case Split::val: return train_size;
        case Split::test: return train_size + val_size;
    }
    return 0;
}

std::size_t TaskSpec::split_size(Split s) const {
    switch (s) {
        case Split::train: return train_size;
        case Split::val: return val_size;
        case Split::test: return test_size;
    }
    return 0;
}

namespace {

struct Canvas {
    std::size_t size;
    std::vector<double> pixels;
    std::vector<std::uint8_t> mask_a, mask_b;

    explicit Canvas(std::size_t s)
        : size(s), pixels(s * s, 0.0), mask_a(s * s, 0), mask_b(s * s, 0) {}

    // Paints pixels with inner_r^2 < d^2 <= r^2 (inner_r < 0 gives a filled disk).
    void paint(long cy, long cx, double r, double inner_r, double intensity,
               std::vector<std::uint8_t>& mask) {
        const long n = static_cast<long>(size);
        for (long y = 0; y < n; ++y)
            for (long x = 0; x < n; ++x) {
                const double d2 = static_cast<double>((y - cy) * (y - cy) + (x - cx) * (x - cx));
                if (d2 <= r * r && (inner_r < 0.0 || d2 > inner_r * inner_r)) {
                    pixels[static_cast<std::size_t>(y * n + x)] = intensity;
                    mask[static_cast<std::size_t>(y * n + x)] = 1;
                }
            }
    }

    void add_noise(std::mt19937_64& rng, double stddev) {
        if (stddev > 0.0) {
            std::normal_distribution<double> noise(0.0, stddev);
            for (auto& v : pixels) v += noise(rng);
        }
        for (auto& v : pixels) v = std::clamp(v, 0.0, 1.0);
    }
};

long uniform_int(std::mt19937_64& rng, long lo, long hi) {
    return std::uniform_int_distribution<long>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

SyntheticSample finish(const TaskSpec& spec, Canvas&& c, int label, std::uint64_t seed) {
    SyntheticSample s;
    s.image = Tensor::from(Shape{1, spec.image_size, spec.image_size}, std::move(c.pixels));
    s.label = label;
    s.mask_a = std::move(c.mask_a);
    s.mask_b = std::move(c.mask_b);
    s.seed = seed;
    return s;
}

SyntheticSample brightness_pair(const TaskSpec& spec, std::mt19937_64& rng, std::uint64_t seed) {
    const long S = static_cast<long>(spec.image_size), r = static_cast<long>(spec.radius);
    const double min_sep = static_cast<double>(S) / 4.0;
    for (;;) {
        const long ly = uniform_int(rng, r, S - 1 - r), lx = uniform_int(rng, r, S / 2 - 1 - r);
        const long ry = uniform_int(rng, r, S - 1 - r), rx = uniform_int(rng, S / 2 + r, S - 1 - r);
        const double sep = std::hypot(static_cast<double>(ly - ry), static_cast<double>(lx - rx));
        // A shared base level keeps either disk alone uninformative.
        const double base = uniform_real(rng, 0.3, 0.85);
        const double level_diff = uniform_real(rng, -0.3, 0.3);
        const double left_level = base + level_diff / 2.0;
        const double right_level = base - level_diff / 2.0;
        Canvas c(spec.image_size);
        c.paint(ly, lx, static_cast<double>(r), -1.0, left_level, c.mask_a);
        c.paint(ry, rx, static_cast<double>(r), -1.0, right_level, c.mask_b);
        c.add_noise(rng, spec.noise);
        if (sep < min_sep) continue;
        SyntheticSample s = finish(spec, std::move(c), 0, seed);
        const double measured = masked_mean(s, s.mask_a) - masked_mean(s, s.mask_b);
        if (std::abs(measured) <= spec.delta) continue;  // ambiguous: regenerate
        s.label = recompute_label(TaskKind::brightness_pair, s, spec.delta);
        return s;
    }
}

SyntheticSample presence_pair(const TaskSpec& spec, std::mt19937_64& rng, std::uint64_t seed) {
    const long S = static_cast<long>(spec.image_size), r = static_cast<long>(spec.radius);
    const double rr = static_cast<double>(r);
    const bool ring_present = uniform_real(rng, 0.0, 1.0) < 0.5;
    // A and B are drawn together: near the centre of a small image there may
    // be no ring site far enough from A.
    long ay = 0, ax = 0, by = 0, bx = 0;
    do {
        ay = uniform_int(rng, r, S - 1 - r);
        ax = uniform_int(rng, r, S - 1 - r);
        by = uniform_int(rng, r, S - 1 - r);
        bx = uniform_int(rng, r, S - 1 - r);
    } while (ring_present && std::hypot(static_cast<double>(by - ay), static_cast<double>(bx - ax)) <
                                 2.0 * rr + 2.0);
    Canvas c(spec.image_size);
    c.paint(ay, ax, rr, -1.0, uniform_real(rng, 0.5, 1.0), c.mask_a);
    const double ring_level = uniform_real(rng, 0.5, 1.0);
    if (ring_present) c.paint(by, bx, rr, rr - 1.5, ring_level, c.mask_b);
    c.add_noise(rng, spec.noise);
    return finish(spec, std::move(c), ring_present ? 0 : 1, seed);
}

}  // namespace

double masked_mean(const SyntheticSample& sample, const std::vector<std::uint8_t>& mask) {
    double sum = 0.0;
    std::size_t n = 0;
    const auto px = sample.image.values();
    for (std::size_t k = 0; k < mask.size(); ++k)
        if (mask[k]) {
            sum += px[k];
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

int recompute_label(TaskKind kind, const SyntheticSample& sample, double delta) {
    if (kind == TaskKind::brightness_pair)
        return masked_mean(sample, sample.mask_a) > masked_mean(sample, sample.mask_b) + delta ? 1 : 0;
    const bool ring_present =
        std::any_of(sample.mask_b.begin(), sample.mask_b.end(), [](std::uint8_t m) { return m != 0; });
    return ring_present ? 0 : 1;
}

SyntheticSample gen_sample(const TaskSpec& spec, std::size_t index) {
    spec.validate();
    const std::uint64_t seed =
        mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(spec.kind)), index);
    std::mt19937_64 rng(seed);
    return spec.kind == TaskKind::brightness_pair ? brightness_pair(spec, rng, seed)
                                                  : presence_pair(spec, rng, seed);
}

Dataset gen_split(const TaskSpec& spec, Split split) {
    spec.validate();
    const std::size_t offset = spec.split_offset(split), n = spec.split_size(split);
    Dataset out(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out[i] = gen_sample(spec, offset + i);
    return out;
}

std::uint64_t image_hash(const SyntheticSample& sample) {
    return fnv1a(std::as_bytes(sample.image.values()));
}

void write_dataset(const std::filesystem::path& path, const Dataset& samples) {
    binio::Writer w;
    w.put_bytes("ACMD");
    w.put(kDatasetVersion);
    for (const auto& s : samples) {
        const std::size_t S = s.size();
        w.put(static_cast<std::uint32_t>(S));
        for (double v : s.image.values()) w.put_f32(static_cast<float>(v));
        w.put(static_cast<std::uint8_t>(s.label));
        for (auto m : s.mask_a) w.put(m);
        for (auto m : s.mask_b) w.put(m);
    }
    binio::write_file(path, w.bytes());
}

Dataset read_dataset(const std::filesystem::path& path) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes);
    if (r.get_string(4) != "ACMD") throw std::runtime_error("not an ACMD dataset: " + path.string());
    if (const auto v = r.get<std::uint8_t>(); v != kDatasetVersion)
        throw std::runtime_error("unsupported ACMD version " + std::to_string(v));
    Dataset out;
    while (!r.at_end()) {
        const std::size_t S = r.get<std::uint32_t>();
        std::vector<double> px(S * S);
        for (auto& v : px) v = r.get_f32();
        SyntheticSample s;
        s.image = Tensor::from(Shape{1, S, S}, std::move(px));
        s.label = r.get<std::uint8_t>();
        s.mask_a.resize(S * S);
        s.mask_b.resize(S * S);
        for (auto& m : s.mask_a) m = r.get<std::uint8_t>();
        for (auto& m : s.mask_b) m = r.get<std::uint8_t>();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace acm
