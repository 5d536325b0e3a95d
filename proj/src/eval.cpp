#include "acm/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace acm {

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc_roc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mid-ranks (1-based) summed over positives; ranks are half-integers so
    // the sum is exact.
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            const int y = labels[order[k]];
            if (y != 0 && y != 1) throw std::invalid_argument("auc_roc: labels must be 0 or 1");
            if (y == 1) {
                rank_sum += mid;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc_roc: both classes required");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

KqStats kq_similarity(std::span<const std::vector<AcmOutputs>> per_sample) {
    KqStats s;
    if (per_sample.empty()) return s;
    const std::size_t modules = per_sample.front().size();
    s.per_module.assign(modules, 0.0);
    for (const auto& outs : per_sample) {
        if (outs.size() != modules) throw std::invalid_argument("kq_similarity: module count varies");
        for (std::size_t m = 0; m < modules; ++m) {
            const Tensor& k = outs[m].k;
            const Tensor& q = outs[m].q;
            double d = 0.0;
            for (std::size_t c = 0; c < k.numel(); ++c) d += k[c] * q[c];
            s.per_module[m] += std::abs(d / static_cast<double>(k.numel()));
        }
    }
    for (auto& v : s.per_module) v /= static_cast<double>(per_sample.size());
    if (modules) s.mean = std::accumulate(s.per_module.begin(), s.per_module.end(), 0.0) / modules;
    return s;
}

KqStats kq_similarity(std::span<const SampleResult> results) {
    KqStats s;
    if (results.empty()) return s;
    const std::size_t modules = results.front().kq.size();
    s.per_module.assign(modules, 0.0);
    for (const auto& r : results)
        for (std::size_t m = 0; m < modules; ++m) s.per_module[m] += std::abs(r.kq.at(m));
    for (auto& v : s.per_module) v /= static_cast<double>(results.size());
    if (modules) s.mean = std::accumulate(s.per_module.begin(), s.per_module.end(), 0.0) / modules;
    return s;
}

namespace {

// Grid cells (row-major h x w) touched by any mask pixel.
std::vector<std::uint8_t> covered_cells(std::span<const std::uint8_t> mask, std::size_t image_size,
                                        std::size_t patch_size) {
    if (patch_size == 0 || image_size % patch_size != 0 || mask.size() != image_size * image_size)
        throw std::invalid_argument("attention_overlap: mask size does not match the grid");
    const std::size_t g = image_size / patch_size;
    std::vector<std::uint8_t> cells(g * g, 0);
    for (std::size_t y = 0; y < image_size; ++y)
        for (std::size_t x = 0; x < image_size; ++x)
            if (mask[y * image_size + x]) cells[(y / patch_size) * g + x / patch_size] = 1;
    return cells;
}

}  // namespace

std::vector<double> attention_overlap(const Tensor& attn, std::span<const std::uint8_t> mask,
                                      std::size_t patch_size) {
    const Shape& s = attn.shape();
    if (!s.is_chw()) throw std::invalid_argument("attention_overlap: attention must be [G,h,w]");
    const std::size_t S = s.height() * patch_size;
    if (s.height() != s.width() || mask.size() != S * S)
        throw std::invalid_argument("attention_overlap: mask is not " + std::to_string(S) + "x" +
                                    std::to_string(S));
    const auto cells = covered_cells(mask, S, patch_size);
    const std::size_t plane = s.plane();
    std::vector<double> out(s.channels(), 0.0);
    for (std::size_t g = 0; g < s.channels(); ++g)
        for (std::size_t p = 0; p < plane; ++p)
            if (cells[p]) out[g] += attn[g * plane + p];
    return out;
}

double uniform_overlap(std::span<const std::uint8_t> mask, std::size_t image_size,
                       std::size_t patch_size) {
    const auto cells = covered_cells(mask, image_size, patch_size);
    const auto covered = std::count(cells.begin(), cells.end(), std::uint8_t{1});
    return static_cast<double>(covered) / static_cast<double>(cells.size());
}

std::vector<std::uint8_t> relevant_mask(const SyntheticSample& sample) {
    std::vector<std::uint8_t> m(sample.mask_a.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = (sample.mask_a[k] | sample.mask_b[k]) ? 1 : 0;
    return m;
}

std::vector<OverlapRow> sample_overlaps(std::span<const AcmOutputs> outputs,
                                        std::span<const std::uint8_t> mask, std::size_t patch_size) {
    std::vector<OverlapRow> rows;
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        for (char branch : {'K', 'Q'}) {
            const Tensor& attn = branch == 'K' ? outputs[m].attn_k : outputs[m].attn_q;
            const auto scores = attention_overlap(attn, mask, patch_size);
            for (std::size_t g = 0; g < scores.size(); ++g) rows.push_back({m, g, branch, scores[g]});
        }
    }
    return rows;
}

OverlapRow OverlapSummary::best() const {
    if (rows.empty()) throw std::logic_error("OverlapSummary: no attention maps");
    return *std::max_element(rows.begin(), rows.end(),
                             [](const OverlapRow& a, const OverlapRow& b) { return a.overlap < b.overlap; });
}

OverlapSummary dataset_overlap(const ModelParams& params, const BackboneConfig& config,
                               std::span<const SyntheticSample> samples) {
    const std::size_t n = samples.size();
    std::vector<std::vector<OverlapRow>> per(n);
    std::vector<double> uniform(n);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
        NoGradGuard no_grad;
        const auto mask = relevant_mask(samples[i]);
        const ModelOutputs out = model_forward(samples[i].image, params, config);
        per[i] = sample_overlaps(out.acm, mask, config.patch_size);
        uniform[i] = uniform_overlap(mask, config.image_size, config.patch_size);
    }
    OverlapSummary s;
    if (n == 0) return s;
    s.rows = per[0];
    for (auto& r : s.rows) r.overlap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < s.rows.size(); ++k) s.rows[k].overlap += per[i][k].overlap;
        s.uniform += uniform[i];
    }
    for (auto& r : s.rows) r.overlap /= static_cast<double>(n);
    s.uniform /= static_cast<double>(n);
    return s;
}

EvalReport summarize_results(std::span<const SampleResult> results, std::span<const int> labels) {
    EvalReport r;
    const double n = static_cast<double>(results.size());
    for (const auto& s : results) {
        r.scores.push_back(s.logit);
        r.loss += s.loss / n;
        r.task_loss += s.task_loss / n;
        r.orth_loss += s.orth_loss / n;
    }
    r.auc = auc_roc(r.scores, labels);
    r.kq = kq_similarity(results);
    return r;
}

EvalReport evaluate(const ModelParams& params, const BackboneConfig& config,
                    std::span<const SyntheticSample> samples, double lambda) {
    const auto results = predict(params, config, samples, lambda);
    std::vector<int> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) labels.push_back(s.label);
    return summarize_results(results, labels);
}

std::string format_g6(double v) {
    char buf[64];
    // %g honours LC_NUMERIC; the CLI never calls setlocale, so this is "C".
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void write_metrics_csv(std::span<const EpochMetrics> history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kMetricsHeader << '\n';
    for (const auto& m : history)
        out << m.epoch << ',' << m.split << ',' << format_g6(m.loss) << ',' << format_g6(m.task_loss)
            << ',' << format_g6(m.orth_loss) << ',' << format_g6(m.auc) << ','
            << format_g6(m.mean_abs_kq) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw std::runtime_error("metrics csv: bad header in " + path.string());
    std::vector<EpochMetrics> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 7) throw std::runtime_error("metrics csv: expected 7 fields: " + line);
        EpochMetrics m;
        m.epoch = std::stoi(f[0]);
        m.split = f[1];
        m.loss = std::stod(f[2]);
        m.task_loss = std::stod(f[3]);
        m.orth_loss = std::stod(f[4]);
        m.auc = std::stod(f[5]);
        m.mean_abs_kq = std::stod(f[6]);
        out.push_back(m);
    }
    return out;
}

void write_overlap_csv(std::span<const OverlapRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "module,group,branch,overlap\n";
    for (const auto& r : rows)
        out << r.module << ',' << r.group << ',' << r.branch << ',' << format_g6(r.overlap) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace acm
