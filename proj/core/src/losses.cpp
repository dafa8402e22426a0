#include "dcr/losses.hpp"

namespace dcr {

namespace {

void require_binary(const Tensor& gt, const char* op) {
    for (double v : gt.values()) {
        if (v != 0.0 && v != 1.0) {
            throw ContractError(std::string(op) + ": ground truth must be binary");
        }
    }
}

void require_same_shape(const Tensor& logits, const Tensor& gt, const char* op) {
    if (logits.shape() != gt.shape()) {
        throw DimensionError(std::string(op) + ": logits " + shape_str(logits.shape()) +
                             " vs ground truth " + shape_str(gt.shape()));
    }
}

// max(x,0) - x*g + log(1 + exp(-|x|))
Tensor stable_bce(const Tensor& logits, const Tensor& gt) {
    return add(sub(relu(logits), mul(logits, gt)), softplus(neg(abs(logits))));
}

}  // namespace

Tensor weighted_bce(const Tensor& logits, const Tensor& gt, std::int64_t kernel) {
    require_same_shape(logits, gt, "weighted_bce");
    require_binary(gt, "weighted_bce");

    Tensor blurred = avg_pool(gt.detached(), kernel, 1, kernel / 2);
    Tensor w = add_scalar(scale(abs(sub(blurred, gt.detached())), 5.0), 1.0);
    double w_sum = 0.0;
    for (double v : w.values()) w_sum += v;

    Tensor weighted = mul(w, stable_bce(logits, gt));
    return scale(sum_all(weighted), 1.0 / w_sum);
}

Tensor dice_loss(const Tensor& logits, const Tensor& gt) {
    require_same_shape(logits, gt, "dice_loss");
    require_binary(gt, "dice_loss");

    const std::int64_t batch = logits.dim(0);
    const std::int64_t per_item = logits.size() / batch;
    Tensor p = reshape(sigmoid(logits), {batch, per_item});
    Tensor g = reshape(gt.detached(), {batch, per_item});

    Tensor inter = sum_axis(mul(p, g), 1);  // [B x 1]
    Tensor p_sum = sum_axis(p, 1);
    Tensor g_sum = sum_axis(g, 1);
    Tensor frac = div(add_scalar(scale(inter, 2.0), 1.0), add_scalar(add(p_sum, g_sum), 1.0));
    Tensor per_item_loss = add_scalar(neg(frac), 1.0);
    return scale(sum_all(per_item_loss), 1.0 / static_cast<double>(batch));
}

LossReport total_loss(const ForwardOutputs& out, const Tensor& gt) {
    LossReport report;
    Tensor acc;

    auto add_map = [&](const std::string& name, const Tensor& logits) {
        Tensor wb = weighted_bce(logits, gt);
        Tensor dc = dice_loss(logits, gt);
        report.per_map.push_back({name, wb.item(), dc.item()});
        Tensor term = add(wb, dc);
        acc = acc.defined() ? add(acc, term) : term;
    };

    add_map("final", out.final_map);
    for (std::size_t i = 0; i < out.side_maps.size(); ++i) {
        add_map("side" + std::to_string(i + 1), out.side_maps[i]);
    }
    if (out.coarse_m.defined()) add_map("coarse_m", out.coarse_m);

    report.total_tensor = acc;
    report.total = acc.item();
    return report;
}

}  // namespace dcr
