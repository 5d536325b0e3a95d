#include "acm/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace acm {

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    if (image.pixels.size() != image.width * image.height)
        throw std::invalid_argument("write_pgm: pixel count does not match dimensions");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic;
    GrayImage img;
    int maxval = 0;
    in >> magic >> img.width >> img.height >> maxval;
    if (magic != "P5" || maxval != 255) throw std::runtime_error("not a P5/255 PGM: " + path.string());
    in.get();
    img.pixels.resize(img.width * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw std::runtime_error("truncated PGM: " + path.string());
    return img;
}

std::vector<std::uint8_t> normalize_to_bytes(std::span<const double> values) {
    std::vector<std::uint8_t> out(values.size(), 128);
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t k = 0; k < values.size(); ++k)
        out[k] = static_cast<std::uint8_t>(std::lround(255.0 * (values[k] - *lo) / range));
    return out;
}

GrayImage upsample_nearest(std::span<const std::uint8_t> map, std::size_t h, std::size_t w,
                           std::size_t factor) {
    if (map.size() != h * w || factor == 0)
        throw std::invalid_argument("upsample_nearest: bad dimensions");
    GrayImage img{w * factor, h * factor, {}};
    img.pixels.resize(img.width * img.height);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            img.pixels[y * img.width + x] = map[(y / factor) * w + x / factor];
    return img;
}

namespace {

bool on_contour(const std::vector<std::uint8_t>& mask, std::size_t S, std::size_t y, std::size_t x) {
    if (!mask[y * S + x]) return false;
    if (y == 0 || x == 0 || y + 1 == S || x + 1 == S) return true;
    return !mask[(y - 1) * S + x] || !mask[(y + 1) * S + x] || !mask[y * S + x - 1] ||
           !mask[y * S + x + 1];
}

}  // namespace

GrayImage side_by_side_with_contours(const SyntheticSample& sample) {
    const std::size_t S = sample.size();
    GrayImage img{2 * S, S, std::vector<std::uint8_t>(2 * S * S)};
    const auto px = sample.image.values();
    for (std::size_t y = 0; y < S; ++y)
        for (std::size_t x = 0; x < S; ++x) {
            const auto v = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(px[y * S + x], 0.0, 1.0)));
            img.pixels[y * 2 * S + x] = v;
            std::uint8_t right = v;
            if (on_contour(sample.mask_b, S, y, x)) right = 160;
            if (on_contour(sample.mask_a, S, y, x)) right = 255;
            img.pixels[y * 2 * S + S + x] = right;
        }
    return img;
}

ExportResult export_attention(const ModelParams& params, const BackboneConfig& config,
                              const SyntheticSample& sample, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    NoGradGuard no_grad;
    const ModelOutputs out = model_forward(sample.image, params, config);
    ExportResult result;
    const std::size_t grid = config.grid();
    for (std::size_t m = 0; m < out.acm.size(); ++m) {
        for (char branch : {'K', 'Q'}) {
            const Tensor& attn = branch == 'K' ? out.acm[m].attn_k : out.acm[m].attn_q;
            const std::size_t plane = attn.shape().plane();
            for (std::size_t g = 0; g < attn.shape().channels(); ++g) {
                const auto map = normalize_to_bytes(attn.values().subspan(g * plane, plane));
                const auto path = out_dir / ("attn_m" + std::to_string(m) + "_g" + std::to_string(g) +
                                             "_" + branch + ".pgm");
                write_pgm(path, upsample_nearest(map, grid, grid, config.patch_size));
                result.images.push_back(path);
            }
        }
    }

    const std::size_t S = sample.size();
    GrayImage input{S, S, {}};
    for (double v : sample.image.values())
        input.pixels.push_back(static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))));
    write_pgm(out_dir / "input.pgm", input);
    write_pgm(out_dir / "input_masks.pgm", side_by_side_with_contours(sample));
    result.images.push_back(out_dir / "input.pgm");
    result.images.push_back(out_dir / "input_masks.pgm");

    result.overlaps = sample_overlaps(out.acm, relevant_mask(sample), config.patch_size);
    write_overlap_csv(result.overlaps, out_dir / "overlap.csv");
    return result;
}

}  // namespace acm
