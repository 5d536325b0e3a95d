#include <doctest.h>

#include <cmath>

#include "acm/experiments.hpp"
#include "acm/training.hpp"

using namespace acm;

namespace {

BackboneConfig tiny(ModuleKind kind) {
    BackboneConfig c;
    c.image_size = 16;
    c.patch_size = 4;
    c.widths = {8};
    c.module_kind = kind;
    c.acm.groups = 2;
    c.acm.bottleneck_ratio = 4;
    return c;
}

TaskSpec tiny_task(TaskKind kind) {
    TaskSpec t;
    t.kind = kind;
    t.image_size = 16;
    t.radius = 3;
    t.train_size = 64;
    t.val_size = 32;
    t.test_size = 32;
    return t;
}

TrainConfig quick() {
    TrainConfig t;
    t.epochs = 3;
    t.lr_drop_epoch = 2;
    t.batch_size = 16;
    return t;
}

void fill(ModelParams& p, double value, double grad) {
    for (auto& [n, t] : p.named()) {
        for (auto& v : t->mutable_values()) v = value;
        t->set_grad(std::vector<double>(t->numel(), grad));
    }
}

}  // namespace

TEST_CASE("sgd step without momentum") {
    ModelParams p = model_init(tiny(ModuleKind::none), 1);
    TrainConfig cfg;
    cfg.lr = 0.1;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    OptimizerState st = OptimizerState::for_params(p, cfg.lr);
    fill(p, 1.0, 0.5);
    sgd_step(p, st, cfg);
    for (const auto& [n, t] : p.named())
        for (double v : t->values()) CHECK(v == doctest::Approx(0.95).epsilon(1e-15));
    CHECK_FALSE(p.cls_w.has_grad());
}

TEST_CASE("sgd step with momentum follows the hand recurrence") {
    ModelParams p = model_init(tiny(ModuleKind::acm), 1);
    TrainConfig cfg;
    cfg.lr = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    OptimizerState st = OptimizerState::for_params(p, cfg.lr);
    fill(p, 1.0, 0.5);
    sgd_step(p, st, cfg);
    CHECK(p.cls_b[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(st.velocity.back()[0] == doctest::Approx(0.5).epsilon(1e-15));
    for (auto& [n, t] : p.named()) t->set_grad(std::vector<double>(t->numel(), 0.5));
    sgd_step(p, st, cfg);
    CHECK(st.velocity.back()[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(p.cls_b[0] == doctest::Approx(0.855).epsilon(1e-15));
}

TEST_CASE("zero gradient and zero decay leave parameters unchanged") {
    ModelParams p = model_init(tiny(ModuleKind::se), 2);
    const ModelParams before = p.clone();
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    OptimizerState st = OptimizerState::for_params(p, cfg.lr);
    for (auto& [n, t] : p.named()) t->set_grad(std::vector<double>(t->numel(), 0.0));
    sgd_step(p, st, cfg);
    const auto a = p.named();
    const auto b = before.named();
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a[i].second->numel(); ++k) CHECK((*a[i].second)[k] == (*b[i].second)[k]);
}

TEST_CASE("sgd step refuses a missing gradient") {
    ModelParams p = model_init(tiny(ModuleKind::none), 3);
    TrainConfig cfg;
    OptimizerState st = OptimizerState::for_params(p, cfg.lr);
    CHECK_THROWS_AS(sgd_step(p, st, cfg), std::logic_error);
}

TEST_CASE("learning rate drops after the drop epoch") {
    TrainConfig cfg;
    CHECK(cfg.lr_at(1) == 0.01);
    CHECK(cfg.lr_at(25) == 0.01);
    CHECK(cfg.lr_at(26) == doctest::Approx(0.001));
    cfg.lr_drop_epoch = 31;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("fit is bitwise deterministic for a fixed seed") {
    const TaskSpec task = tiny_task(TaskKind::presence_pair);
    const FitResult a = fit(tiny(ModuleKind::acm), task, quick());
    const FitResult b = fit(tiny(ModuleKind::acm), task, quick());
    REQUIRE(a.status == FitStatus::ok);
    REQUIRE(a.history.size() == 6);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].loss == b.history[i].loss);
        CHECK(a.history[i].auc == b.history[i].auc);
        CHECK(a.history[i].mean_abs_kq == b.history[i].mean_abs_kq);
    }
    CHECK(a.history[0].split == "train");
    CHECK(a.history[1].split == "val");
}

TEST_CASE("no orth component without an ACM or with lambda zero") {
    const TaskSpec task = tiny_task(TaskKind::brightness_pair);
    TrainConfig cfg = quick();
    cfg.lambda = 0.0;
    const FitResult r = fit(tiny(ModuleKind::none), task, cfg);
    for (const auto& m : r.history) {
        CHECK(m.orth_loss == 0.0);
        CHECK(m.loss == m.task_loss);
    }
    const FitResult a = fit(tiny(ModuleKind::acm), task, cfg);
    for (const auto& m : a.history) CHECK(m.loss == m.task_loss);
}

TEST_CASE("a runaway learning rate is reported as divergence") {
    TrainConfig cfg = quick();
    cfg.lr = 1e12;
    // Normalization keeps even this finite, so it is switched off.
    BackboneConfig model = tiny(ModuleKind::acm);
    model.channel_norm = false;
    const FitResult r = fit(model, tiny_task(TaskKind::presence_pair), cfg);
    CHECK(r.status == FitStatus::diverged);
    CHECK_FALSE(r.message.empty());
}

// Regression value established by running the default toy setting.
TEST_CASE("brightness_pair with an ACM (G=4, C=16) fits the training set") {
    RunConfig cfg;
    cfg.task.kind = TaskKind::brightness_pair;
    cfg.model.acm.groups = 4;
    cfg.finalize();
    REQUIRE(cfg.model.widths.back() == 16);
    const FitResult r = fit(cfg.model, cfg.task, cfg.train);
    REQUIRE(r.status == FitStatus::ok);
    REQUIRE(r.history.size() == 60);
    CHECK(r.history[58].split == "train");
    CHECK(r.history[58].auc > 0.99);
}
