#pragma once

#include <string>
#include <vector>

#include "dcr/config.hpp"
#include "dcr/metrics.hpp"

namespace dcr {

struct EpochLog {
    std::int64_t epoch = 0;
    double train_total = 0.0;
    double train_wbce = 0.0;
    double train_dice = 0.0;
    MetricReport val;
};

struct TrainResult {
    std::vector<double> step_losses;
    std::vector<EpochLog> epochs;
    double best_val_dice = 0.0;
    std::int64_t best_epoch = 0;
    std::string best_checkpoint;   // <out>/best.ckpt
    std::string final_checkpoint;  // <out>/final.ckpt
};

// Splits come from the dataset directory when set, otherwise from the
// seeded synthetic generator.
Splits prepare_data(const RunConfig& cfg);

// Adam over the deep-supervised composite loss. Per epoch: a training pass
// (memory active, augmentation per config) followed by a validation pass in
// eval mode. Writes train_log.csv, best/final checkpoints, and summary.txt
// under cfg.out_dir. Aborts with NumericError naming the batch when the
// loss goes non-finite.
TrainResult train_run(const RunConfig& cfg);

struct EvalResult {
    DatasetEvaluation evaluation;
    std::vector<std::string> ids;
    double samples_per_sec = 0.0;
    std::string csv;  // byte-stable across reruns
};

// Loads cfg.checkpoint_path and evaluates the test split in eval mode.
// Writes eval_metrics.csv and summary text (throughput lives there, not in
// the CSV) under cfg.out_dir.
EvalResult eval_run(const RunConfig& cfg);

struct AblationRow {
    std::string variant;
    bool icr = false, ecr = false, rom = false;
    double dice_mean = 0.0, dice_sd = 0.0;
    double iou_mean = 0.0, iou_sd = 0.0;
};

// Trains backbone / +ICR / +ECR (within-batch bank) / +ICR+ECR+ROM over
// cfg.ablate_seeds seeds each and reports test Dice/IoU mean and sd.
std::vector<AblationRow> ablate_run(const RunConfig& cfg);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace dcr
