#pragma once

#include <string>
#include <vector>

#include "dcr/network.hpp"
#include "dcr/ops.hpp"

namespace dcr {

struct LossReport {
    struct MapTerms {
        std::string name;
        double wbce = 0.0;
        double dice = 0.0;
    };
    double total = 0.0;
    std::vector<MapTerms> per_map;
    Tensor total_tensor;  // tracked scalar for backward()
};

// Boundary-weighted BCE on logits. Weight map w = 1 + 5*|avgpool15(gt)-gt|
// (weights exceed 1 only near ground-truth boundaries); loss =
// sum(w * bce) / sum(w) with the log-sum-exp-stable BCE form.
Tensor weighted_bce(const Tensor& logits, const Tensor& gt, std::int64_t kernel = 15);

// Per-item soft Dice on sigmoid probabilities with smoothing 1, averaged
// over the batch.
Tensor dice_loss(const Tensor& logits, const Tensor& gt);

// Deep-supervised composite: (wbce + dice) summed over the final map, the
// three side maps, and the coarse map when present, with equal weights.
LossReport total_loss(const ForwardOutputs& out, const Tensor& gt);

}  // namespace dcr
