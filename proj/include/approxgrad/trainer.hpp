#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

#include "approxgrad/appgemm.hpp"
#include "approxgrad/dataset.hpp"
#include "approxgrad/model.hpp"
#include "approxgrad/multiplier.hpp"

namespace approxgrad {

/// Learning rate for 1-based epochs in [first_epoch, last_epoch].
struct LrSegment {
    int first_epoch = 1;
    int last_epoch = 1;
    double rate = 1e-3;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One Adam update with bias correction; t is the 1-based step count.
void adam_update(double& w, double& m, double& v, long long t, double grad, double lr,
                 const AdamConfig& cfg);

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    EstimatorKind estimator = EstimatorKind::lut1d;
    int hws = 0;  // 0 = default_hws(bits)
    int epochs = 30;
    int batch = 64;
    std::vector<LrSegment> schedule;  // empty = 1e-3 / 5e-4 / 2.5e-4 thirds
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamConfig adam;
    std::uint64_t seed = 1;
    bool paper_eq7 = false;

    void check() const;
    double rate_for_epoch(int epoch) const;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double eval_acc = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> trace;
    double initial_acc = 0.0;  // eval accuracy with the AppMult before retraining
    double final_acc = 0.0;
    double wall_seconds = 0.0;
};

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Retrains a fresh model (seeded init) with the multiplier in the loop:
/// fake-quantized forward, estimator-LUT backward, optimizer step.
/// Deterministic in (spec, data, mult, cfg).
std::pair<Mlp, TrainReport> train(const ModelSpec& spec, const Dataset& data,
                                  const Multiplier& mult, const TrainConfig& cfg);

/// Forward-only fake-quant inference, top-1 accuracy. samples are rows.
double evaluate(const Mlp& model, const Multiplier& mult, const TensorR& samples,
                const std::vector<int>& labels);

/// Accuracy on the eval split; NaN when the split is empty.
double evaluate_split(const Mlp& model, const Multiplier& mult, const Dataset& data);

struct ComparisonRun {
    EstimatorKind kind = EstimatorKind::ste;
    TrainReport report;
};

struct ComparisonReport {
    std::vector<ComparisonRun> runs;  // ste, lut1d, lut2d
    double delta_lut1d = 0.0;         // final accuracy minus the STE run's
    double delta_lut2d = 0.0;
};

/// Trains once per estimator kind with shared seed/data/multiplier. Runs
/// may execute concurrently (capped by APPROXGRAD_THREADS); reports are
/// merged in a fixed estimator order.
ComparisonReport compare_estimators(const ModelSpec& spec, const Dataset& data,
                                    const Multiplier& mult, const TrainConfig& base);

/// Per-epoch CSV trace (epoch,lr,train_loss,train_acc,eval_acc[,seconds]).
void write_report_csv(const TrainReport& report, const std::filesystem::path& path,
                      bool include_timing = false);

/// Side-by-side estimator table with the "improvement over STE" deltas.
void write_comparison_csv(const ComparisonReport& report, const std::filesystem::path& path);

/// Thread budget: APPROXGRAD_THREADS when set, hardware concurrency otherwise.
int thread_budget();

}  // namespace approxgrad
