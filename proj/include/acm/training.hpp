#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "acm/backbone.hpp"
#include "acm/eval.hpp"
#include "acm/tasks.hpp"

namespace acm {

struct TrainConfig {
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int epochs = 30;
    int lr_drop_epoch = 25;  // epochs after this one run at lr * lr_drop_factor
    double lr_drop_factor = 0.1;
    std::size_t batch_size = 32;
    double lambda = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
    double lr_at(int epoch) const;
};

struct OptimizerState {
    std::vector<std::vector<double>> velocity;  // mirrors ModelParams::named()
    int epoch = 0;
    double lr = 0.0;

    static OptimizerState for_params(const ModelParams& params, double lr);
};

// g = grad + wd * w; v = momentum * v + g; w -= lr * v; then clears grads.
// Uses state.lr. Throws std::logic_error if any parameter has no gradient.
void sgd_step(ModelParams& params, OptimizerState& state, const TrainConfig& cfg);

enum class FitStatus { ok, diverged };

struct FitResult {
    ModelParams params;
    std::vector<EpochMetrics> history;  // train and val row per completed epoch
    FitStatus status = FitStatus::ok;
    std::string message;
};

using EpochCallback = std::function<void(const EpochMetrics& train, const EpochMetrics& val)>;

FitResult fit(const BackboneConfig& model, const Dataset& train, const Dataset& val,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

FitResult fit(const BackboneConfig& model, const TaskSpec& task, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

}  // namespace acm
