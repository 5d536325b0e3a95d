// acm: gradient checks, training, ablations and attention export for the
// Attend-and-Compare Module toy experiments.
//
// Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 divergence.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "acm/checkpoint.hpp"
#include "acm/config.hpp"
#include "acm/experiments.hpp"
#include "acm/visualize.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kCheckFailed = 1, kUsage = 2, kDiverged = 3;

std::string default_out_dir() {
    const char* env = std::getenv("ACM_OUT_DIR");
    return env ? env : "";
}

int require_out(const std::string& out) {
    if (out.empty()) {
        std::cerr << "error: --out not given and ACM_OUT_DIR is unset\n";
        return kUsage;
    }
    return kOk;
}

int cmd_gradcheck(std::uint64_t seed, double eps, double tol, const std::string& preset) {
    std::vector<acm::NamedGradcheck> reports;
    if (preset == "acm") {
        for (std::size_t g : {1, 2, 4})
            for (auto& r : acm::gradcheck_acm(seed, g, eps, tol)) {
                r.name = "G" + std::to_string(g) + "." + r.name;
                reports.push_back(std::move(r));
            }
    } else if (preset == "model") {
        reports = acm::gradcheck_model(seed, eps, tol);
    } else {
        std::cerr << "error: unknown preset '" << preset << "' (expected acm or model)\n";
        return kUsage;
    }
    bool ok = true;
    for (const auto& r : reports) {
        std::printf("%-28s max_rel_err=%.3e  %s\n", r.name.c_str(), r.report.max_rel_error,
                    r.report.passed ? "ok" : "FAIL");
        ok = ok && r.report.passed;
    }
    std::printf("gradcheck %s: %s (tol %.1e)\n", preset.c_str(), ok ? "PASS" : "FAIL", tol);
    return ok ? kOk : kCheckFailed;
}

int cmd_train(const std::string& config_path, const std::string& out) {
    if (int rc = require_out(out)) return rc;
    acm::RunConfig cfg;
    try {
        cfg = acm::load_run_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    fs::create_directories(out);
    std::ofstream(fs::path(out) / "config.resolved") << acm::serialize_run_config(cfg);

    const acm::Splits splits = acm::make_splits(cfg.task);
    const acm::RunOutcome run = acm::train_and_test(cfg, splits, [](const auto& tr, const auto& va) {
        std::printf("epoch %3d  train loss %.4f auc %.4f | val loss %.4f auc %.4f kq %.4f\n", tr.epoch,
                    tr.loss, tr.auc, va.loss, va.auc, va.mean_abs_kq);
        std::fflush(stdout);
    });
    acm::write_metrics_csv(run.fit.history, fs::path(out) / "metrics.csv");
    if (run.fit.status == acm::FitStatus::diverged) {
        std::printf("status: diverged (%s)\n", run.fit.message.c_str());
        return kDiverged;
    }
    acm::save_checkpoint(run.fit.params, cfg.model, fs::path(out) / "checkpoint.acmc");
    std::printf("final val AUC %.4f  test AUC %.4f\n", run.val_auc, run.test_auc);
    return kOk;
}

int cmd_ablate(const std::string& config_path, const std::string& out, int seeds) {
    if (int rc = require_out(out)) return rc;
    if (seeds < 1) {
        std::cerr << "error: --seeds must be >= 1\n";
        return kUsage;
    }
    acm::RunConfig base;
    try {
        base = acm::load_run_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    fs::create_directories(out);
    const acm::Splits splits = acm::make_splits(base.task);
    std::vector<acm::AblationRow> rows;
    for (const auto& arm : acm::ablation_arms()) {
        for (int k = 0; k < seeds; ++k) {
            acm::RunConfig cfg = acm::with_arm(base, arm);
            cfg.train.seed = base.train.seed + static_cast<std::uint64_t>(k);
            const acm::RunOutcome run = acm::train_and_test(cfg, splits);
            rows.push_back({arm.name, cfg.train.seed, run.val_auc, run.test_auc,
                            run.fit.status == acm::FitStatus::diverged});
            std::printf("%-13s seed %llu  val AUC %.4f  test AUC %.4f%s\n", arm.name.c_str(),
                        static_cast<unsigned long long>(cfg.train.seed), run.val_auc, run.test_auc,
                        rows.back().diverged ? "  (diverged)" : "");
            std::fflush(stdout);
        }
    }
    acm::write_ablation_csv(rows, fs::path(out) / "ablation.csv");
    for (const auto& arm : acm::ablation_arms()) {
        std::vector<double> test;
        for (const auto& r : rows)
            if (r.variant == arm.name) test.push_back(r.test_auc);
        std::printf("median test AUC %-13s %.4f\n", arm.name.c_str(), acm::median(test));
    }
    return kOk;
}

int cmd_export(const std::string& checkpoint, const std::string& config_path, std::size_t index,
               const std::string& out) {
    if (int rc = require_out(out)) return rc;
    acm::RunConfig cfg;
    acm::ModelParams params;
    try {
        cfg = acm::load_run_config(config_path);
        params = acm::load_checkpoint(checkpoint, cfg.model);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    if (index >= cfg.task.test_size) {
        std::cerr << "error: --index must be below test_size " << cfg.task.test_size << '\n';
        return kUsage;
    }
    const acm::SyntheticSample sample =
        acm::gen_sample(cfg.task, cfg.task.split_offset(acm::Split::test) + index);
    const acm::ExportResult r = acm::export_attention(params, cfg.model, sample, out);
    std::printf("wrote %zu images to %s (label %d)\n", r.images.size(), out.c_str(), sample.label);
    for (const auto& row : r.overlaps)
        std::printf("module %zu group %zu %c overlap %.4f\n", row.module, row.group, row.branch, row.overlap);
    return kOk;
}

int cmd_dump(const std::string& config_path, const std::string& out) {
    if (int rc = require_out(out)) return rc;
    acm::RunConfig cfg;
    try {
        cfg = acm::load_run_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    fs::create_directories(out);
    for (auto split : {acm::Split::train, acm::Split::val, acm::Split::test}) {
        const auto path = fs::path(out) / (std::string(acm::to_string(split)) + ".acmd");
        acm::write_dataset(path, acm::gen_split(cfg.task, split));
        std::printf("wrote %s\n", path.string().c_str());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attend-and-Compare Module toy experiments"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    double eps = 1e-5, tol = 1e-4;
    std::string preset = "acm";
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every parameter gradient");
    gc->add_option("--seed", seed, "random seed");
    gc->add_option("--eps", eps, "central-difference step")->check(CLI::PositiveNumber);
    gc->add_option("--tol", tol, "max relative error")->check(CLI::NonNegativeNumber);
    gc->add_option("--preset", preset, "acm or model");

    std::string config, out = default_out_dir(), checkpoint;
    int seeds = 5;
    std::size_t index = 0;

    auto* train = app.add_subcommand("train", "train one model and write metrics + checkpoint");
    train->add_option("--config", config, "run config file")->required();
    train->add_option("--out", out, "output directory (default $ACM_OUT_DIR)");

    auto* ablate = app.add_subcommand("ablate", "train every module variant over several seeds");
    ablate->add_option("--config", config, "run config file")->required();
    ablate->add_option("--out", out, "output directory (default $ACM_OUT_DIR)");
    ablate->add_option("--seeds", seeds, "seeds per variant");

    auto* exp = app.add_subcommand("export-attention", "write attention maps of one test sample as PGM");
    exp->add_option("--checkpoint", checkpoint, "checkpoint.acmc")->required();
    exp->add_option("--config", config, "run config used for training")->required();
    exp->add_option("--index", index, "test-split sample index");
    exp->add_option("--out", out, "output directory (default $ACM_OUT_DIR)");

    auto* dump = app.add_subcommand("dump-data", "write train/val/test splits as ACMD files");
    dump->add_option("--config", config, "run config file")->required();
    dump->add_option("--out", out, "output directory (default $ACM_OUT_DIR)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*gc) return cmd_gradcheck(seed, eps, tol, preset);
        if (*train) return cmd_train(config, out);
        if (*ablate) return cmd_ablate(config, out, seeds);
        if (*exp) return cmd_export(checkpoint, config, index, out);
        if (*dump) return cmd_dump(config, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
