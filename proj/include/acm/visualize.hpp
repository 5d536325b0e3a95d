#pragma once

// Attention-map export as binary PGM (P5, maxval 255).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "acm/backbone.hpp"
#include "acm/eval.hpp"
#include "acm/tasks.hpp"

namespace acm {

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

// min -> 0, max -> 255, linear in between; a constant map becomes all 128.
std::vector<std::uint8_t> normalize_to_bytes(std::span<const double> values);

// Nearest-neighbour upsampling of an h x w map by an integer factor.
GrayImage upsample_nearest(std::span<const std::uint8_t> map, std::size_t h, std::size_t w,
                           std::size_t factor);

// Input image on the left; on the right the same image with mask_a contours
// at 255 and mask_b contours at 160.
GrayImage side_by_side_with_contours(const SyntheticSample& sample);

struct ExportResult {
    std::vector<std::filesystem::path> images;
    std::vector<OverlapRow> overlaps;  // against the union of both masks
};

// Writes attn_m{module}_g{group}_{K|Q}.pgm for every module, group and
// branch, plus input.pgm, input_masks.pgm and overlap.csv.
ExportResult export_attention(const ModelParams& params, const BackboneConfig& config,
                              const SyntheticSample& sample, const std::filesystem::path& out_dir);

}  // namespace acm
