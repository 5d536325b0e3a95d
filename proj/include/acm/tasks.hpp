#pragma once

// Synthetic two-region tasks whose label needs a comparison between distant
// image regions.
//
//   brightness_pair  disk in the left half vs disk in the right half;
//                    label 1 iff mean(left) > mean(right) + delta.
//   presence_pair    filled disk A always present, hollow ring B present
//                    with probability 1/2; label 1 iff B is absent.

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "acm/tensor.hpp"

namespace acm {

enum class TaskKind { brightness_pair, presence_pair };
enum class Split { train, val, test };

std::string_view to_string(TaskKind k);
std::string_view to_string(Split s);
TaskKind parse_task_kind(std::string_view s);

struct TaskSpec {
    TaskKind kind = TaskKind::brightness_pair;
    std::size_t image_size = 32;
    std::size_t radius = 4;
    double delta = 0.15;
    double noise = 0.05;
    std::size_t train_size = 4000;
    std::size_t val_size = 500;
    std::size_t test_size = 1000;
    std::uint64_t seed = 1;

    void validate() const;
    // First global sample index of a split; splits occupy disjoint ranges.
    std::size_t split_offset(Split s) const;
    std::size_t split_size(Split s) const;
};

struct SyntheticSample {
    Tensor image;  // [1, S, S], values in [0, 1]
    int label = 0;
    std::vector<std::uint8_t> mask_a;  // S*S, row-major
    std::vector<std::uint8_t> mask_b;
    std::uint64_t seed = 0;

    std::size_t size() const { return image.shape()[1]; }
};

using Dataset = std::vector<SyntheticSample>;

SyntheticSample gen_sample(const TaskSpec& spec, std::size_t index);
Dataset gen_split(const TaskSpec& spec, Split split);

// Re-derives the label from pixels and masks alone.
int recompute_label(TaskKind kind, const SyntheticSample& sample, double delta);

// Mean image intensity over a mask.
double masked_mean(const SyntheticSample& sample, const std::vector<std::uint8_t>& mask);

std::uint64_t image_hash(const SyntheticSample& sample);

// "ACMD" dump: magic, u8 version, then per sample u32 S, S*S f32 pixels,
// u8 label, S*S u8 mask_a, S*S u8 mask_b. All little-endian.
inline constexpr std::uint8_t kDatasetVersion = 1;
void write_dataset(const std::filesystem::path& path, const Dataset& samples);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace acm
