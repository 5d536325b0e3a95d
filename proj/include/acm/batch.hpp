#pragma once

// Per-sample fan-out over a batch.
//
// Each sample builds its own graph on private parameter leaves, so samples can
// run on any thread. Gradients are then summed in sample-index order, which
// keeps results bitwise independent of the thread count. The *_serial
// functions are the single-threaded reference the parallel ones are tested
// against.

#include <span>
#include <vector>

#include "acm/backbone.hpp"
#include "acm/tasks.hpp"

namespace acm {

struct SampleResult {
    double logit = 0.0;
    double prob = 0.0;
    double task_loss = 0.0;
    double orth_loss = 0.0;  // sum over modules of dot(K, Q) / C
    double loss = 0.0;       // task_loss + lambda * orth_loss
    std::vector<double> kq;  // per module dot(K, Q) / C

    friend bool operator==(const SampleResult&, const SampleResult&) = default;
};

struct BatchGradients {
    // One buffer per ModelParams::named() entry, summed over the batch.
    std::vector<std::vector<double>> grads;
    std::vector<SampleResult> samples;
};

// Forward + backward of one sample on private copies of the parameters.
SampleResult sample_gradients(const ModelParams& params, const BackboneConfig& config,
                              const SyntheticSample& sample, double lambda,
                              std::vector<std::vector<double>>& grads_out);

BatchGradients batch_gradients(const ModelParams& params, const BackboneConfig& config,
                               std::span<const SyntheticSample* const> batch, double lambda);
BatchGradients batch_gradients_serial(const ModelParams& params, const BackboneConfig& config,
                                      std::span<const SyntheticSample* const> batch, double lambda);

SampleResult predict_sample(const ModelParams& params, const BackboneConfig& config,
                            const SyntheticSample& sample, double lambda);

std::vector<SampleResult> predict(const ModelParams& params, const BackboneConfig& config,
                                  std::span<const SyntheticSample> samples, double lambda);
std::vector<SampleResult> predict_serial(const ModelParams& params, const BackboneConfig& config,
                                         std::span<const SyntheticSample> samples, double lambda);

}  // namespace acm
