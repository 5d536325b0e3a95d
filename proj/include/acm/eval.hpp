#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "acm/backbone.hpp"
#include "acm/batch.hpp"
#include "acm/tasks.hpp"

namespace acm {

// Probability that a random positive outscores a random negative; ties count
// one half (normalized Mann-Whitney U). Throws if either class is missing.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct KqStats {
    std::vector<double> per_module;  // mean over samples of |dot(K,Q)/C|
    double mean = 0.0;               // average over modules; 0 with no modules
};

KqStats kq_similarity(std::span<const std::vector<AcmOutputs>> per_sample);
KqStats kq_similarity(std::span<const SampleResult> results);

// Attention mass on grid cells that contain at least one mask pixel.
// attn is [G, h, w], mask is S x S row-major, and h * patch_size must equal S.
std::vector<double> attention_overlap(const Tensor& attn, std::span<const std::uint8_t> mask,
                                      std::size_t patch_size);

// Overlap a uniform attention map would score: the covered-cell fraction.
double uniform_overlap(std::span<const std::uint8_t> mask, std::size_t image_size,
                       std::size_t patch_size);

// Union of both task-relevant regions.
std::vector<std::uint8_t> relevant_mask(const SyntheticSample& sample);

struct OverlapRow {
    std::size_t module = 0;
    std::size_t group = 0;
    char branch = 'K';
    double overlap = 0.0;
};

std::vector<OverlapRow> sample_overlaps(std::span<const AcmOutputs> outputs,
                                        std::span<const std::uint8_t> mask, std::size_t patch_size);

struct OverlapSummary {
    std::vector<OverlapRow> rows;  // dataset mean per (module, group, branch)
    double uniform = 0.0;          // dataset mean covered-cell fraction
    OverlapRow best() const;
};

OverlapSummary dataset_overlap(const ModelParams& params, const BackboneConfig& config,
                               std::span<const SyntheticSample> samples);

struct EvalReport {
    double auc = 0.5;
    KqStats kq;
    double loss = 0.0;
    double task_loss = 0.0;
    double orth_loss = 0.0;
    std::vector<double> scores;
};

EvalReport summarize_results(std::span<const SampleResult> results, std::span<const int> labels);
EvalReport evaluate(const ModelParams& params, const BackboneConfig& config,
                    std::span<const SyntheticSample> samples, double lambda);

struct EpochMetrics {
    int epoch = 0;
    std::string split;
    double loss = 0.0;
    double task_loss = 0.0;
    double orth_loss = 0.0;
    double auc = 0.0;
    double mean_abs_kq = 0.0;
};

inline constexpr const char* kMetricsHeader = "epoch,split,loss,task_loss,orth_loss,auc,mean_abs_kq";

// Six significant digits, '.' decimal point regardless of locale.
void write_metrics_csv(std::span<const EpochMetrics> history, const std::filesystem::path& path);
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

void write_overlap_csv(std::span<const OverlapRow> rows, const std::filesystem::path& path);

std::string format_g6(double v);

}  // namespace acm
