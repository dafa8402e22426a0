#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dcr/tensor.hpp"

namespace dcr {

struct MetricReport {
    double mae = 0.0;
    double dice = 0.0;
    double iou = 0.0;
    double boundary_f = 0.0;
    double s_measure = 0.0;
};

// Mean absolute difference between a probability map and a binary mask.
double metric_mae(const Tensor& pred, const Tensor& gt);

// Binarizes pred at `threshold`; returns (dice, iou). Both masks empty -> (1, 1).
std::pair<double, double> metric_dice_iou(const Tensor& pred, const Tensor& gt,
                                          double threshold = 0.5);

// Contour F-measure: boundary pixels matched within `tolerance` pixels
// (Euclidean). tolerance < 0 selects the default round(0.008 * diagonal).
double metric_boundary_f(const Tensor& pred_mask, const Tensor& gt_mask,
                         std::int64_t tolerance = -1);

// Structure measure S_alpha (alpha = 0.5): object-level plus region-level
// structural similarity of a probability map against a binary mask.
double metric_s_measure(const Tensor& pred, const Tensor& gt_mask);

MetricReport evaluate_sample(const Tensor& pred, const Tensor& gt,
                             std::int64_t boundary_tolerance = -1);

struct DatasetEvaluation {
    MetricReport mean;
    std::vector<MetricReport> per_sample;
};

DatasetEvaluation evaluate_dataset(const std::vector<Tensor>& preds,
                                   const std::vector<Tensor>& gts,
                                   std::int64_t boundary_tolerance = -1);

// CSV with per-sample rows and a mean row; raw [0,1] columns plus x100
// presentation columns.
std::string metrics_csv(const DatasetEvaluation& eval, const std::vector<std::string>& ids);

}  // namespace dcr
