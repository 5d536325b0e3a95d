#include <doctest.h>

#include <fstream>
#include <iterator>

#include "acm/checkpoint.hpp"
#include "acm/config.hpp"
#include "acm/visualize.hpp"
#include "oracles.hpp"

using namespace acm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("acm_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<char> bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

BackboneConfig small() {
    BackboneConfig c;
    c.image_size = 16;
    c.patch_size = 4;
    c.widths = {8, 8};
    c.acm.groups = 2;
    c.acm.bottleneck_ratio = 4;
    return c;
}

}  // namespace

// ---- config ----

TEST_CASE("config defaults and overrides") {
    const RunConfig d = parse_run_config("");
    CHECK(d.task.kind == TaskKind::brightness_pair);
    CHECK(d.model.acm.groups == 4);
    CHECK(d.train.lambda == 0.1);
    CHECK(d.model.acm.lambda == 0.1);

    const RunConfig c = parse_run_config(
        "# comment\n"
        "task.kind = presence_pair   # trailing\n"
        "\n"
        "model.widths = 8,12\n"
        "acm.ratio = 4\n"
        "acm.groups=2\n"
        "acm.lambda = 0\n"
        "model.head_pool = avg\n");
    CHECK(c.task.kind == TaskKind::presence_pair);
    CHECK(c.model.widths == std::vector<std::size_t>{8, 12});
    CHECK(c.model.acm.groups == 2);
    CHECK(c.train.lambda == 0.0);
    CHECK(c.model.head_pool == HeadPool::avg);
    CHECK(c.model.image_size == c.task.image_size);
}

TEST_CASE("config rejects bad input") {
    CHECK_THROWS_AS(parse_run_config("task.colour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("acm.groups = 2\nacm.groups = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("acm.groups\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("acm.groups = two\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("acm.groups = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("model.coord_channels = maybe\n"), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/acm.cfg"), ConfigError);
}

TEST_CASE("parse then serialize then parse is the identity") {
    const RunConfig c = parse_run_config(
        "task.kind = presence_pair\ntask.delta = 0.123456789\ntrain.lr = 0.003\n"
        "model.widths = 16,8\nacm.ratio = 4\nacm.variant = k_plus_recal\ntrain.seed = 18446744073709551615\n");
    const std::string text = serialize_run_config(c);
    const RunConfig back = parse_run_config(text);
    CHECK(serialize_run_config(back) == text);
    CHECK(back.task.delta == 0.123456789);
    CHECK(back.train.seed == 18446744073709551615ull);
    // Every key appears exactly once.
    for (const auto& k : run_config_keys()) CHECK(text.find(k + " = ") != std::string::npos);
}

// ---- checkpoint ----

TEST_CASE("checkpoint save, load, save gives identical bytes") {
    const fs::path dir = scratch("ckpt");
    const BackboneConfig cfg = small();
    const ModelParams p = model_init(cfg, 11);
    save_checkpoint(p, cfg, dir / "a.acmc");
    const ModelParams q = load_checkpoint(dir / "a.acmc", cfg);
    save_checkpoint(q, cfg, dir / "b.acmc");
    CHECK(bytes_of(dir / "a.acmc") == bytes_of(dir / "b.acmc"));
    const auto pn = p.named();
    const auto qn = q.named();
    for (std::size_t i = 0; i < pn.size(); ++i) CHECK(oracle::copy(*pn[i].second) == oracle::copy(*qn[i].second));
}

TEST_CASE("checkpoint rejects mismatched configs and corruption") {
    const BackboneConfig cfg = small();
    const std::vector<std::byte> good = encode_checkpoint(model_init(cfg, 1), cfg);

    BackboneConfig other = cfg;
    other.acm.groups = 4;
    CHECK_THROWS_AS(decode_checkpoint(good, other), CheckpointError);
    other = cfg;
    other.module_kind = ModuleKind::se;
    CHECK_THROWS_AS(decode_checkpoint(good, other), CheckpointError);

    // lambda is a training setting, not part of the model.
    BackboneConfig lam = cfg;
    lam.acm.lambda = 0.0;
    CHECK_NOTHROW(decode_checkpoint(good, lam));

    for (std::size_t pos : {std::size_t{0}, std::size_t{5}, good.size() / 2, good.size() - 1}) {
        std::vector<std::byte> bad = good;
        bad[pos] ^= std::byte{0x40};
        CHECK_THROWS_AS(decode_checkpoint(bad, cfg), CheckpointError);
    }
    CHECK_THROWS_AS(decode_checkpoint(std::span(good).first(good.size() - 3), cfg), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent.acmc", cfg), CheckpointError);
}

TEST_CASE("config digest covers structure only") {
    BackboneConfig a = small(), b = small();
    b.acm.lambda = 0.5;
    CHECK(config_digest(a) == config_digest(b));
    b.widths = {8, 16};
    CHECK(config_digest(a) != config_digest(b));
}

// ---- dataset dump ----

TEST_CASE("dataset dump round-trips at f32 precision") {
    const fs::path dir = scratch("ds");
    TaskSpec s;
    s.kind = TaskKind::presence_pair;
    s.train_size = 12;
    const Dataset d = gen_split(s, Split::train);
    write_dataset(dir / "d.acmd", d);
    const Dataset back = read_dataset(dir / "d.acmd");
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back[i].label == d[i].label);
        CHECK(back[i].mask_a == d[i].mask_a);
        CHECK(back[i].mask_b == d[i].mask_b);
        for (std::size_t k = 0; k < d[i].image.numel(); ++k)
            CHECK(back[i].image[k] == static_cast<double>(static_cast<float>(d[i].image[k])));
    }
    std::ofstream(dir / "bad.acmd") << "nope";
    CHECK_THROWS(read_dataset(dir / "bad.acmd"));
}

// ---- pgm export ----

TEST_CASE("normalization to bytes") {
    CHECK(normalize_to_bytes(std::vector<double>{1.0, 3.0, 2.0}) == std::vector<std::uint8_t>{0, 255, 128});
    CHECK(normalize_to_bytes(std::vector<double>{0.4, 0.4}) == std::vector<std::uint8_t>{128, 128});
}

TEST_CASE("nearest upsampling and pgm round trip") {
    const GrayImage up = upsample_nearest(std::vector<std::uint8_t>{1, 2, 3, 4}, 2, 2, 2);
    CHECK(up.width == 4);
    CHECK(up.pixels == std::vector<std::uint8_t>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});
    const fs::path dir = scratch("pgm");
    write_pgm(dir / "u.pgm", up);
    const GrayImage back = read_pgm(dir / "u.pgm");
    CHECK(back.width == 4);
    CHECK(back.height == 4);
    CHECK(back.pixels == up.pixels);
    const auto raw = bytes_of(dir / "u.pgm");
    CHECK(std::string(raw.begin(), raw.begin() + 2) == "P5");
}

TEST_CASE("attention export writes every map") {
    const fs::path dir = scratch("export");
    BackboneConfig cfg = small();
    TaskSpec t;
    t.kind = TaskKind::presence_pair;
    t.image_size = 16;
    t.radius = 3;
    cfg.image_size = 16;
    const SyntheticSample s = gen_sample(t, 0);
    const ExportResult r = export_attention(model_init(cfg, 2), cfg, s, dir);
    // 2 modules x 2 groups x {K, Q} + input + input_masks
    CHECK(r.images.size() == 10);
    CHECK(r.overlaps.size() == 8);
    CHECK(fs::exists(dir / "attn_m1_g1_Q.pgm"));
    CHECK(fs::exists(dir / "input_masks.pgm"));
    CHECK(fs::exists(dir / "overlap.csv"));
    const GrayImage m = read_pgm(dir / "attn_m0_g0_K.pgm");
    CHECK(m.width == 16);
    CHECK(m.height == 16);
    const GrayImage side = read_pgm(dir / "input_masks.pgm");
    CHECK(side.width == 32);
    for (const auto& row : r.overlaps) {
        CHECK(row.overlap >= 0.0);
        CHECK(row.overlap <= 1.0 + 1e-12);
    }
}
