#include "acm/checkpoint.hpp"

#include <sstream>

#include "acm/hash.hpp"
#include "binio.hpp"

namespace acm {

std::string model_config_text(const BackboneConfig& c) {
    std::ostringstream os;
    os << "image_size=" << c.image_size << ";patch_size=" << c.patch_size << ";widths=";
    for (std::size_t i = 0; i < c.widths.size(); ++i) os << (i ? "," : "") << c.widths[i];
    os << ";module=" << to_string(c.module_kind) << ";head_pool=" << to_string(c.head_pool)
       << ";coord_channels=" << (c.coord_channels ? 1 : 0)
       << ";channel_norm=" << (c.channel_norm ? 1 : 0);
    if (c.module_kind != ModuleKind::none) os << ";ratio=" << c.acm.bottleneck_ratio;
    if (c.module_kind == ModuleKind::acm)
        os << ";groups=" << c.acm.groups << ";variant=" << to_string(c.acm.variant);
    return os.str();
}

std::uint64_t config_digest(const BackboneConfig& config) {
    Fnv1a h;
    h.update(model_config_text(config));
    return h.digest();
}

std::vector<std::byte> encode_checkpoint(const ModelParams& params, const BackboneConfig& config) {
    binio::Writer w;
    w.put_bytes("ACMC");
    w.put(kCheckpointVersion);
    w.put(config_digest(config));
    const auto named = params.named();
    w.put(static_cast<std::uint32_t>(named.size()));
    for (const auto& [name, t] : named) {
        w.put(static_cast<std::uint16_t>(name.size()));
        w.put_bytes(name);
        w.put(static_cast<std::uint8_t>(t->shape().rank()));
        for (auto d : t->shape().dims()) w.put(static_cast<std::uint32_t>(d));
        for (double v : t->values()) w.put_f64(v);
    }
    w.put(fnv1a(w.bytes()));
    return w.bytes();
}

ModelParams decode_checkpoint(std::span<const std::byte> bytes, const BackboneConfig& config) {
    if (bytes.size() < 4 + 1 + 8 + 4 + 8) throw CheckpointError("checkpoint: file too short");
    const auto payload = bytes.first(bytes.size() - 8);
    binio::Reader tail(bytes.last(8));
    if (tail.get<std::uint64_t>() != fnv1a(payload))
        throw CheckpointError("checkpoint: checksum mismatch (corrupt file)");

    binio::Reader r(payload);
    if (r.get_string(4) != "ACMC") throw CheckpointError("checkpoint: bad magic");
    if (const auto v = r.get<std::uint8_t>(); v != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(v));
    if (r.get<std::uint64_t>() != config_digest(config))
        throw CheckpointError("checkpoint: config digest does not match " + model_config_text(config));

    ModelParams params = model_init(config, 0);
    auto named = params.named();
    if (r.get<std::uint32_t>() != named.size())
        throw CheckpointError("checkpoint: parameter count mismatch");
    try {
        for (auto& [name, t] : named) {
            const std::string stored = r.get_string(r.get<std::uint16_t>());
            if (stored != name)
                throw CheckpointError("checkpoint: expected parameter " + name + ", found " + stored);
            std::vector<std::size_t> dims(r.get<std::uint8_t>());
            for (auto& d : dims) d = r.get<std::uint32_t>();
            if (dims != t->shape().dims())
                throw CheckpointError("checkpoint: shape mismatch for " + name);
            auto values = t->mutable_values();
            for (auto& v : values) v = r.get_f64();
        }
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
    if (!r.at_end()) throw CheckpointError("checkpoint: trailing bytes");
    return params;
}

void save_checkpoint(const ModelParams& params, const BackboneConfig& config,
                     const std::filesystem::path& path) {
    binio::write_file(path, encode_checkpoint(params, config));
}

ModelParams load_checkpoint(const std::filesystem::path& path, const BackboneConfig& config) {
    std::vector<std::byte> bytes;
    try {
        bytes = binio::read_file(path);
    } catch (const std::exception& e) {
        throw CheckpointError(e.what());
    }
    return decode_checkpoint(bytes, config);
}

}  // namespace acm
