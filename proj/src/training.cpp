#include "acm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "acm/batch.hpp"
#include "acm/hash.hpp"

namespace acm {

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (lr_drop_epoch < 1 || lr_drop_epoch > epochs)
        throw std::invalid_argument("TrainConfig: lr_drop_epoch must be in [1, epochs]");
    if (!(lr_drop_factor > 0.0)) throw std::invalid_argument("TrainConfig: lr_drop_factor must be > 0");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
}

double TrainConfig::lr_at(int epoch) const { return epoch > lr_drop_epoch ? lr * lr_drop_factor : lr; }

OptimizerState OptimizerState::for_params(const ModelParams& params, double lr) {
    OptimizerState s;
    for (const auto& [name, t] : params.named()) s.velocity.emplace_back(t->numel(), 0.0);
    s.lr = lr;
    return s;
}

void sgd_step(ModelParams& params, OptimizerState& state, const TrainConfig& cfg) {
    auto named = params.named();
    if (state.velocity.size() != named.size())
        throw std::invalid_argument("sgd_step: optimizer state does not match parameters");
    for (const auto& [name, t] : named)
        if (!t->has_grad()) throw std::logic_error("sgd_step: missing gradient for " + name);
    for (std::size_t k = 0; k < named.size(); ++k) {
        Tensor& t = *named[k].second;
        auto w = t.mutable_values();
        const auto g = t.grad();
        auto& v = state.velocity[k];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g[j] + cfg.weight_decay * w[j];
            v[j] = cfg.momentum * v[j] + gj;
            w[j] -= state.lr * v[j];
        }
        t.zero_grad();
    }
}

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

FitResult fit(const BackboneConfig& model, const Dataset& train, const Dataset& val,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
    model.validate();
    cfg.validate();
    if (train.empty() || val.empty()) throw std::invalid_argument("fit: empty split");

    FitResult result;
    result.params = model_init(model, cfg.seed);
    OptimizerState state = OptimizerState::for_params(result.params, cfg.lr);

    std::vector<std::size_t> order(train.size());
    std::vector<const SyntheticSample*> batch;

    auto diverge = [&](int epoch, const std::string& what) {
        result.status = FitStatus::diverged;
        result.message = "diverged at epoch " + std::to_string(epoch) + ": " + what;
        return result;
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        state.epoch = epoch;
        state.lr = cfg.lr_at(epoch);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(mix_seed(cfg.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        std::vector<SampleResult> seen;
        std::vector<int> labels;
        seen.reserve(train.size());
        labels.reserve(train.size());
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);

            BatchGradients bg;
            try {
                bg = batch_gradients(result.params, model, batch, cfg.lambda);
            } catch (const NonFiniteError& e) {
                return diverge(epoch, e.what());
            }
            const double inv = 1.0 / static_cast<double>(batch.size());
            auto named = result.params.named();
            for (std::size_t k = 0; k < named.size(); ++k) {
                for (auto& g : bg.grads[k]) g *= inv;
                if (!all_finite(bg.grads[k])) return diverge(epoch, "non-finite gradient");
                named[k].second->set_grad(std::move(bg.grads[k]));
            }
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (!std::isfinite(bg.samples[i].loss) || !std::isfinite(bg.samples[i].logit))
                    return diverge(epoch, "non-finite loss");
                labels.push_back(batch[i]->label);
                seen.push_back(std::move(bg.samples[i]));
            }
            sgd_step(result.params, state, cfg);
        }
        for (const auto& [name, t] : result.params.named())
            if (!all_finite(t->values())) return diverge(epoch, "non-finite parameter " + name);

        const EvalReport tr = summarize_results(seen, labels);
        EvalReport va;
        try {
            va = evaluate(result.params, model, val, cfg.lambda);
        } catch (const NonFiniteError& e) {
            return diverge(epoch, e.what());
        }
        if (!std::isfinite(va.loss) || !all_finite(va.scores))
            return diverge(epoch, "non-finite validation loss");

        EpochMetrics mt{epoch, "train", tr.loss, tr.task_loss, tr.orth_loss, tr.auc, tr.kq.mean};
        EpochMetrics mv{epoch, "val", va.loss, va.task_loss, va.orth_loss, va.auc, va.kq.mean};
        result.history.push_back(mt);
        result.history.push_back(mv);
        if (on_epoch) on_epoch(mt, mv);
    }
    return result;
}

FitResult fit(const BackboneConfig& model, const TaskSpec& task, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
    const Dataset train = gen_split(task, Split::train);
    const Dataset val = gen_split(task, Split::val);
    return fit(model, train, val, cfg, on_epoch);
}

}  // namespace acm
