#pragma once

// Ready-made experiment drivers shared by the CLI and the acceptance suite.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acm/config.hpp"
#include "acm/eval.hpp"
#include "acm/tasks.hpp"
#include "acm/training.hpp"

namespace acm {

struct NamedGradcheck {
    std::string name;
    GradcheckReport report;
};

// Single ACM on C=8, H=W=5 with a random linear task loss plus lambda * orth.
std::vector<NamedGradcheck> gradcheck_acm(std::uint64_t seed, std::size_t groups, double h,
                                          double tol, AcmVariant variant = AcmVariant::full);

// Full toy model (S=16, p=4, widths 16,16, ACM G=2) under the composite loss.
std::vector<NamedGradcheck> gradcheck_model(std::uint64_t seed, double h, double tol);

struct Splits {
    Dataset train, val, test;
};
Splits make_splits(const TaskSpec& task);

struct RunOutcome {
    FitResult fit;
    double val_auc = 0.0;   // last epoch
    double test_auc = 0.0;
    double val_mean_abs_kq = 0.0;
};

RunOutcome train_and_test(const RunConfig& config, const Splits& splits,
                          const EpochCallback& on_epoch = {});

// The five ablation arms: none, diff_only, recal_only, k_plus_recal, full.
struct AblationArm {
    std::string name;
    ModuleKind module;
    AcmVariant variant;
};
std::vector<AblationArm> ablation_arms();
RunConfig with_arm(RunConfig config, const AblationArm& arm);

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;
    double val_auc = 0.0;
    double test_auc = 0.0;
    bool diverged = false;
};

// Median of the finite entries; NaN when there are none.
double median(std::vector<double> values);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace acm
