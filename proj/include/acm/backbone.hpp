#pragma once

// Toy local-receptive-field network.
//
//   image [1,S,S] -> patchify [p*p, S/p, S/p]
//   stage 0: relu(norm(mix(patches) + pos(coords))) -> context module
//   stage s: relu(norm(mix(h))) -> context module
//   score map = 1x1 projection to one channel; logit = global max/avg pool.
//
// Without a context module every score-map cell depends only on its own patch
// (and its own fixed coordinates), so only the context module can relate
// distant regions.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acm/acm_module.hpp"
#include "acm/baselines.hpp"
#include "acm/tensor.hpp"

namespace acm {

enum class ModuleKind { none, se, acm };
enum class HeadPool { max, avg };

std::string_view to_string(ModuleKind k);
std::string_view to_string(HeadPool h);
ModuleKind parse_module_kind(std::string_view s);
HeadPool parse_head_pool(std::string_view s);

struct BackboneConfig {
    std::size_t image_size = 32;
    std::size_t patch_size = 4;
    std::vector<std::size_t> widths{16, 16};
    ModuleKind module_kind = ModuleKind::acm;
    AcmConfig acm;  // channels is overwritten per stage
    HeadPool head_pool = HeadPool::max;
    bool coord_channels = true;
    bool channel_norm = true;  // per-location channel normalization before each relu

    std::size_t grid() const { return image_size / patch_size; }
    std::size_t num_modules() const { return module_kind == ModuleKind::none ? 0 : widths.size(); }
    AcmConfig stage_acm(std::size_t stage) const;
    void validate() const;
};

struct StageParams {
    Tensor mix_w;  // [1, width, in]
    Tensor mix_b;  // [width]
    std::optional<AcmParams> acm;
    std::optional<SeParams> se;
};

struct ModelParams {
    Tensor pos_w;  // [1, widths[0], 2]; only used with coord_channels
    std::vector<StageParams> stages;
    Tensor cls_w;  // [1, 1, widths.back()]
    Tensor cls_b;  // [1]

    // Stable order; this is the checkpoint and optimizer order.
    std::vector<std::pair<std::string, Tensor*>> named();
    std::vector<std::pair<std::string, const Tensor*>> named() const;
    // Fresh gradient-carrying leaves with copied values.
    ModelParams clone() const;
    std::size_t parameter_count() const;
};

struct ModelOutputs {
    Tensor logit;      // [1]
    Tensor score_map;  // [1, S/p, S/p]
    std::vector<AcmOutputs> acm;
};

ModelParams model_init(const BackboneConfig& config, std::uint64_t seed);

Tensor patchify(const Tensor& image, std::size_t patch_size);
Tensor unpatchify(const Tensor& patches, std::size_t patch_size);

// Fixed [2, h, w] map of cell-centre coordinates in (-1, 1): x first, then y.
Tensor coordinate_map(std::size_t grid);

ModelOutputs model_forward(const Tensor& image, const ModelParams& params,
                           const BackboneConfig& config);

}  // namespace acm
