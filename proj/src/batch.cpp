#include "acm/batch.hpp"

#include <algorithm>
#include <exception>

namespace acm {

namespace {

struct Forward {
    ModelOutputs model;
    Tensor prob, task, total;
};

Forward run(const ModelParams& params, const BackboneConfig& config, const SyntheticSample& sample,
            double lambda) {
    Forward f;
    f.model = model_forward(sample.image, params, config);
    f.prob = sigmoid(f.model.logit);
    f.task = bce_loss(f.prob, sample.label);
    f.total = total_loss(f.task, f.model.acm, lambda);
    return f;
}

SampleResult summarize(const Forward& f, double lambda) {
    SampleResult r;
    r.logit = f.model.logit.item();
    r.prob = f.prob.item();
    r.task_loss = f.task.item();
    for (const auto& a : f.model.acm) {
        r.kq.push_back(a.orth.item());
        r.orth_loss += a.orth.item();
    }
    r.loss = r.task_loss + lambda * r.orth_loss;
    return r;
}

std::vector<std::vector<double>> zero_grads(const ModelParams& params) {
    std::vector<std::vector<double>> g;
    for (const auto& [name, t] : params.named()) g.emplace_back(t->numel(), 0.0);
    return g;
}

// Exceptions cannot leave an OpenMP region, so workers park them and the
// lowest sample index wins. That keeps the reported error thread-count independent.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

SampleResult sample_gradients(const ModelParams& params, const BackboneConfig& config,
                              const SyntheticSample& sample, double lambda,
                              std::vector<std::vector<double>>& grads_out) {
    ModelParams local = params.clone();
    const Forward f = run(local, config, sample, lambda);
    backward(f.total);
    const auto named = local.named();
    grads_out.resize(named.size());
    for (std::size_t k = 0; k < named.size(); ++k) {
        const Tensor& t = *named[k].second;
        if (t.has_grad())
            grads_out[k].assign(t.grad().begin(), t.grad().end());
        else
            grads_out[k].assign(t.numel(), 0.0);  // parameter unused by this variant
    }
    return summarize(f, lambda);
}

BatchGradients batch_gradients(const ModelParams& params, const BackboneConfig& config,
                               std::span<const SyntheticSample* const> batch, double lambda) {
    const std::size_t n = batch.size();
    std::vector<std::vector<std::vector<double>>> per_sample(n);
    BatchGradients out;
    out.samples.resize(n);
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            out.samples[i] = sample_gradients(params, config, *batch[i], lambda, per_sample[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    rethrow_first(errors);

    out.grads = zero_grads(params);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < out.grads.size(); ++k) {
            auto& dst = out.grads[k];
            const auto& src = per_sample[i][k];
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
    return out;
}

BatchGradients batch_gradients_serial(const ModelParams& params, const BackboneConfig& config,
                                      std::span<const SyntheticSample* const> batch,
                                      double lambda) {
    BatchGradients out;
    out.grads = zero_grads(params);
    std::vector<std::vector<double>> g;
    for (const SyntheticSample* s : batch) {
        out.samples.push_back(sample_gradients(params, config, *s, lambda, g));
        for (std::size_t k = 0; k < out.grads.size(); ++k)
            for (std::size_t j = 0; j < out.grads[k].size(); ++j) out.grads[k][j] += g[k][j];
    }
    return out;
}

SampleResult predict_sample(const ModelParams& params, const BackboneConfig& config,
                            const SyntheticSample& sample, double lambda) {
    NoGradGuard no_grad;
    return summarize(run(params, config, sample, lambda), lambda);
}

std::vector<SampleResult> predict(const ModelParams& params, const BackboneConfig& config,
                                  std::span<const SyntheticSample> samples, double lambda) {
    std::vector<SampleResult> out(samples.size());
    std::vector<std::exception_ptr> errors(samples.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < samples.size(); ++i) {
        try {
            out[i] = predict_sample(params, config, samples[i], lambda);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    rethrow_first(errors);
    return out;
}

std::vector<SampleResult> predict_serial(const ModelParams& params, const BackboneConfig& config,
                                         std::span<const SyntheticSample> samples, double lambda) {
    std::vector<SampleResult> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict_sample(params, config, s, lambda));
    return out;
}

}  // namespace acm
