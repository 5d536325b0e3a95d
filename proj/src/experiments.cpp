#include "acm/experiments.hpp"

#include <algorithm>
#include <random>
#include <cmath>
#include <fstream>
#include <limits>

#include "acm/hash.hpp"

namespace acm {

std::vector<NamedGradcheck> gradcheck_acm(std::uint64_t seed, std::size_t groups, double h,
                                          double tol, AcmVariant variant) {
    AcmConfig cfg;
    cfg.channels = 8;
    cfg.groups = groups;
    cfg.bottleneck_ratio = 4;
    cfg.lambda = 0.1;
    cfg.variant = variant;
    AcmParams params = acm_init(cfg, mix_seed(seed, 1));
    Tensor x = randn(Shape{8, 5, 5}, mix_seed(seed, 2), 1.0, true);
    // Non-zero recalibration biases so the relu sees both signs.
    params.rec1_b = randn(params.rec1_b.shape(), mix_seed(seed, 3), 0.5, true);
    params.rec2_b = randn(params.rec2_b.shape(), mix_seed(seed, 4), 0.5, true);
    const Tensor target = randn(Shape{8, 5, 5}, mix_seed(seed, 5), 1.0);

    auto loss = [&] {
        AcmOutputs out = acm_forward(x, params, cfg);
        Tensor task = scale(dot(out.y, target), 1.0 / 200.0);
        return total_loss(task, std::span(&out, 1), cfg.lambda);
    };

    std::vector<NamedGradcheck> reports;
    reports.push_back({"x", gradcheck(loss, x, h, tol)});
    for (auto& [name, t] : params.named(""))
        reports.push_back({name, gradcheck(loss, *t, h, tol)});
    return reports;
}

std::vector<NamedGradcheck> gradcheck_model(std::uint64_t seed, double h, double tol) {
    BackboneConfig cfg;
    cfg.image_size = 16;
    cfg.patch_size = 4;
    cfg.widths = {16, 16};
    cfg.module_kind = ModuleKind::acm;
    cfg.acm.groups = 2;
    cfg.acm.bottleneck_ratio = 4;
    cfg.head_pool = HeadPool::max;
    ModelParams params = model_init(cfg, mix_seed(seed, 10));
    for (auto& [name, t] : params.named())
        if (name.ends_with("_b")) *t = randn(t->shape(), mix_seed(seed, name.size() + 11), 0.1, true);

    std::vector<double> px(16 * 16);
    std::mt19937_64 rng(mix_seed(seed, 20));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : px) v = u(rng);
    const Tensor image = Tensor::from(Shape{1, 16, 16}, std::move(px));
    const double lambda = 0.1;

    auto loss = [&] {
        ModelOutputs out = model_forward(image, params, cfg);
        Tensor task = bce_loss(sigmoid(out.logit), 1);
        return total_loss(task, out.acm, lambda);
    };

    std::vector<NamedGradcheck> reports;
    for (auto& [name, t] : params.named()) reports.push_back({name, gradcheck(loss, *t, h, tol)});
    return reports;
}

Splits make_splits(const TaskSpec& task) {
    return {gen_split(task, Split::train), gen_split(task, Split::val), gen_split(task, Split::test)};
}

RunOutcome train_and_test(const RunConfig& config, const Splits& splits, const EpochCallback& on_epoch) {
    RunOutcome out;
    out.fit = fit(config.model, splits.train, splits.val, config.train, on_epoch);
    if (out.fit.status != FitStatus::ok) {
        out.val_auc = out.test_auc = out.val_mean_abs_kq = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const EpochMetrics& last_val = out.fit.history.back();
    out.val_auc = last_val.auc;
    out.val_mean_abs_kq = last_val.mean_abs_kq;
    out.test_auc = evaluate(out.fit.params, config.model, splits.test, config.train.lambda).auc;
    return out;
}

std::vector<AblationArm> ablation_arms() {
    return {{"none", ModuleKind::none, AcmVariant::full},
            {"diff_only", ModuleKind::acm, AcmVariant::diff_only},
            {"recal_only", ModuleKind::acm, AcmVariant::recal_only},
            {"k_plus_recal", ModuleKind::acm, AcmVariant::k_plus_recal},
            {"full", ModuleKind::acm, AcmVariant::full}};
}

RunConfig with_arm(RunConfig config, const AblationArm& arm) {
    config.model.module_kind = arm.module;
    config.model.acm.variant = arm.variant;
    config.finalize();
    return config;
}

double median(std::vector<double> values) {
    std::erase_if(values, [](double v) { return !std::isfinite(v); });
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "variant,seed,val_auc,test_auc\n";
    std::vector<std::string> order;
    for (const auto& r : rows) {
        out << r.variant << ',' << r.seed << ',' << format_g6(r.val_auc) << ',' << format_g6(r.test_auc) << '\n';
        if (std::find(order.begin(), order.end(), r.variant) == order.end()) order.push_back(r.variant);
    }
    for (const auto& v : order) {
        std::vector<double> val, test;
        for (const auto& r : rows)
            if (r.variant == v) {
                val.push_back(r.val_auc);
                test.push_back(r.test_auc);
            }
        out << v << ",median," << format_g6(median(val)) << ',' << format_g6(median(test)) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace acm
