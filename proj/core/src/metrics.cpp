#include "dcr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dcr {

namespace {

constexpr double kEps = 2.220446049250313e-16;

struct Grid {
    std::int64_t h, w;
    const double* p;
};

Grid grid_view(const Tensor& t, const char* op) {
    if (t.rank() < 2) throw DimensionError(std::string(op) + ": expected a 2-D map");
    const std::int64_t h = t.dim(t.rank() - 2), w = t.dim(t.rank() - 1);
    if (t.size() != h * w) {
        throw DimensionError(std::string(op) + ": expected a single map, got " +
                             shape_str(t.shape()));
    }
    return {h, w, t.values().data()};
}

void require_prob(const Grid& g, const char* op) {
    for (std::int64_t i = 0; i < g.h * g.w; ++i) {
        if (g.p[i] < 0.0 || g.p[i] > 1.0) {
            throw ContractError(std::string(op) + ": prediction outside [0,1]");
        }
    }
}

void require_same_size(const Grid& a, const Grid& b, const char* op) {
    if (a.h != b.h || a.w != b.w) {
        throw DimensionError(std::string(op) + ": map sizes differ");
    }
}

// Foreground pixels 4-adjacent to background or to the image border.
std::vector<std::uint8_t> boundary_of(const Grid& g) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(g.h * g.w), 0);
    for (std::int64_t y = 0; y < g.h; ++y) {
        for (std::int64_t x = 0; x < g.w; ++x) {
            if (g.p[y * g.w + x] < 0.5) continue;
            const bool edge = y == 0 || y == g.h - 1 || x == 0 || x == g.w - 1;
            const bool bg_neighbor =
                (y > 0 && g.p[(y - 1) * g.w + x] < 0.5) ||
                (y < g.h - 1 && g.p[(y + 1) * g.w + x] < 0.5) ||
                (x > 0 && g.p[y * g.w + x - 1] < 0.5) ||
                (x < g.w - 1 && g.p[y * g.w + x + 1] < 0.5);
            if (edge || bg_neighbor) out[y * g.w + x] = 1;
        }
    }
    return out;
}

// Disk dilation of a pixel set.
std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& src, std::int64_t h,
                                 std::int64_t w, std::int64_t radius) {
    std::vector<std::pair<std::int64_t, std::int64_t>> offsets;
    for (std::int64_t dy = -radius; dy <= radius; ++dy) {
        for (std::int64_t dx = -radius; dx <= radius; ++dx) {
            if (dy * dy + dx * dx <= radius * radius) offsets.emplace_back(dy, dx);
        }
    }
    std::vector<std::uint8_t> out(src.size(), 0);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            if (!src[y * w + x]) continue;
            for (auto [dy, dx] : offsets) {
                const std::int64_t yy = y + dy, xx = x + dx;
                if (yy >= 0 && yy < h && xx >= 0 && xx < w) out[yy * w + xx] = 1;
            }
        }
    }
    return out;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample std (N-1)
    std::int64_t n = 0;
};

template <class Pick>
MeanStd masked_stats(std::int64_t count, Pick&& pick) {
    MeanStd s;
    double sum = 0.0;
    for (std::int64_t i = 0; i < count; ++i) {
        double v;
        if (pick(i, v)) {
            sum += v;
            ++s.n;
        }
    }
    if (s.n == 0) return s;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < count; ++i) {
            double v;
            if (pick(i, v)) acc += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(acc / static_cast<double>(s.n - 1));
    }
    return s;
}

double object_score(const MeanStd& s) {
    if (s.n == 0) return 0.0;
    return 2.0 * s.mean / (s.mean * s.mean + 1.0 + s.std + kEps);
}

// SSIM-style quadrant score from the structure-measure definition.
double region_ssim(const double* pred, const double* gt, std::int64_t stride, std::int64_t qy,
                   std::int64_t qx, std::int64_t qh, std::int64_t qw) {
    const std::int64_t n = qh * qw;
    if (n == 0) return 0.0;
    double mp = 0.0, mg = 0.0;
    for (std::int64_t y = 0; y < qh; ++y) {
        for (std::int64_t x = 0; x < qw; ++x) {
            mp += pred[(qy + y) * stride + qx + x];
            mg += gt[(qy + y) * stride + qx + x];
        }
    }
    mp /= static_cast<double>(n);
    mg /= static_cast<double>(n);
    double vp = 0.0, vg = 0.0, cov = 0.0;
    for (std::int64_t y = 0; y < qh; ++y) {
        for (std::int64_t x = 0; x < qw; ++x) {
            const double dp = pred[(qy + y) * stride + qx + x] - mp;
            const double dg = gt[(qy + y) * stride + qx + x] - mg;
            vp += dp * dp;
            vg += dg * dg;
            cov += dp * dg;
        }
    }
    const double denom_n = static_cast<double>(n) - 1.0 + kEps;
    vp /= denom_n;
    vg /= denom_n;
    cov /= denom_n;

    const double alpha = 4.0 * mp * mg * cov;
    const double beta = (mp * mp + mg * mg) * (vp + vg);
    if (alpha != 0.0) return alpha / (beta + kEps);
    return beta == 0.0 ? 1.0 : 0.0;
}

}  // namespace

double metric_mae(const Tensor& pred, const Tensor& gt) {
    Grid p = grid_view(pred, "mae"), g = grid_view(gt, "mae");
    require_same_size(p, g, "mae");
    require_prob(p, "mae");
    double acc = 0.0;
    for (std::int64_t i = 0; i < p.h * p.w; ++i) acc += std::fabs(p.p[i] - g.p[i]);
    return acc / static_cast<double>(p.h * p.w);
}

std::pair<double, double> metric_dice_iou(const Tensor& pred, const Tensor& gt, double threshold) {
    Grid p = grid_view(pred, "dice_iou"), g = grid_view(gt, "dice_iou");
    require_same_size(p, g, "dice_iou");
    std::int64_t np = 0, ng = 0, inter = 0;
    for (std::int64_t i = 0; i < p.h * p.w; ++i) {
        const bool pb = p.p[i] >= threshold;
        const bool gb = g.p[i] >= 0.5;
        np += pb;
        ng += gb;
        inter += pb && gb;
    }
    if (np == 0 && ng == 0) return {1.0, 1.0};
    const double dice = 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
    const double iou = static_cast<double>(inter) / static_cast<double>(np + ng - inter);
    return {dice, iou};
}

double metric_boundary_f(const Tensor& pred_mask, const Tensor& gt_mask, std::int64_t tolerance) {
    Grid p = grid_view(pred_mask, "boundary_f"), g = grid_view(gt_mask, "boundary_f");
    require_same_size(p, g, "boundary_f");
    if (tolerance < 0) {
        const double diag = std::sqrt(static_cast<double>(p.h * p.h + p.w * p.w));
        tolerance = static_cast<std::int64_t>(std::llround(0.008 * diag));
    }

    auto pb = boundary_of(p);
    auto gb = boundary_of(g);
    const std::int64_t np = std::count(pb.begin(), pb.end(), std::uint8_t{1});
    const std::int64_t ng = std::count(gb.begin(), gb.end(), std::uint8_t{1});
    if (np == 0 && ng == 0) return 1.0;
    if (np == 0 || ng == 0) return 0.0;

    auto gb_dilated = dilate(gb, p.h, p.w, tolerance);
    auto pb_dilated = dilate(pb, p.h, p.w, tolerance);
    std::int64_t matched_p = 0, matched_g = 0;
    for (std::size_t i = 0; i < pb.size(); ++i) {
        if (pb[i] && gb_dilated[i]) ++matched_p;
        if (gb[i] && pb_dilated[i]) ++matched_g;
    }
    const double precision = static_cast<double>(matched_p) / static_cast<double>(np);
    const double recall = static_cast<double>(matched_g) / static_cast<double>(ng);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double metric_s_measure(const Tensor& pred, const Tensor& gt_mask) {
    Grid p = grid_view(pred, "s_measure"), g = grid_view(gt_mask, "s_measure");
    require_same_size(p, g, "s_measure");
    require_prob(p, "s_measure");
    const std::int64_t n = p.h * p.w;

    double gt_sum = 0.0, pred_sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        gt_sum += g.p[i];
        pred_sum += p.p[i];
    }
    const double mu = gt_sum / static_cast<double>(n);
    const double pred_mean = pred_sum / static_cast<double>(n);
    if (mu == 0.0) return 1.0 - pred_mean;  // all-background ground truth
    if (mu == 1.0) return pred_mean;        // all-foreground ground truth

    // object term: foreground/background mean-and-deviation similarity
    auto fg = masked_stats(n, [&](std::int64_t i, double& v) {
        v = p.p[i];
        return g.p[i] >= 0.5;
    });
    auto bg = masked_stats(n, [&](std::int64_t i, double& v) {
        v = 1.0 - p.p[i];
        return g.p[i] < 0.5;
    });
    const double s_object = mu * object_score(fg) + (1.0 - mu) * object_score(bg);

    // region term: 4-way split at the ground-truth centroid
    double sum_x = 0.0, sum_y = 0.0;
    for (std::int64_t y = 0; y < p.h; ++y) {
        for (std::int64_t x = 0; x < p.w; ++x) {
            sum_x += g.p[y * p.w + x] * static_cast<double>(x + 1);
            sum_y += g.p[y * p.w + x] * static_cast<double>(y + 1);
        }
    }
    const std::int64_t cx = static_cast<std::int64_t>(std::llround(sum_x / gt_sum)) - 1;
    const std::int64_t cy = static_cast<std::int64_t>(std::llround(sum_y / gt_sum)) - 1;
    const std::int64_t x_split = cx + 1, y_split = cy + 1;  // quadrant widths/heights

    const double area = static_cast<double>(n);
    struct Quad {
        std::int64_t qy, qx, qh, qw;
    };
    const Quad quads[4] = {
        {0, 0, y_split, x_split},
        {0, x_split, y_split, p.w - x_split},
        {y_split, 0, p.h - y_split, x_split},
        {y_split, x_split, p.h - y_split, p.w - x_split},
    };
    double s_region = 0.0;
    for (const auto& q : quads) {
        const double weight = static_cast<double>(q.qh * q.qw) / area;
        if (weight == 0.0) continue;
        s_region += weight * region_ssim(p.p, g.p, p.w, q.qy, q.qx, q.qh, q.qw);
    }

    const double alpha = 0.5;
    return alpha * s_object + (1.0 - alpha) * s_region;
}

MetricReport evaluate_sample(const Tensor& pred, const Tensor& gt,
                             std::int64_t boundary_tolerance) {
    MetricReport r;
    r.mae = metric_mae(pred, gt);
    auto [dice, iou] = metric_dice_iou(pred, gt);
    r.dice = dice;
    r.iou = iou;

    Grid p = grid_view(pred, "evaluate_sample");
    std::vector<double> binarized(static_cast<std::size_t>(p.h * p.w));
    for (std::int64_t i = 0; i < p.h * p.w; ++i) binarized[i] = p.p[i] >= 0.5 ? 1.0 : 0.0;
    Tensor pred_mask(Shape{p.h, p.w}, std::move(binarized));
    r.boundary_f = metric_boundary_f(pred_mask, gt, boundary_tolerance);
    r.s_measure = metric_s_measure(pred, gt);
    return r;
}

DatasetEvaluation evaluate_dataset(const std::vector<Tensor>& preds,
                                   const std::vector<Tensor>& gts,
                                   std::int64_t boundary_tolerance) {
    if (preds.size() != gts.size()) {
        throw ContractError("evaluate_dataset: " + std::to_string(preds.size()) +
                            " predictions vs " + std::to_string(gts.size()) + " ground truths");
    }
    DatasetEvaluation eval;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        eval.per_sample.push_back(evaluate_sample(preds[i], gts[i], boundary_tolerance));
    }
    const double count = static_cast<double>(eval.per_sample.size());
    for (const auto& r : eval.per_sample) {
        eval.mean.mae += r.mae / count;
        eval.mean.dice += r.dice / count;
        eval.mean.iou += r.iou / count;
        eval.mean.boundary_f += r.boundary_f / count;
        eval.mean.s_measure += r.s_measure / count;
    }
    return eval;
}

std::string metrics_csv(const DatasetEvaluation& eval, const std::vector<std::string>& ids) {
    if (ids.size() != eval.per_sample.size()) {
        throw ContractError("metrics_csv: id count does not match sample count");
    }
    std::ostringstream os;
    os << "sample_id,mae,dice,iou,boundary_f,s_measure,"
          "mae_x100,dice_x100,iou_x100,boundary_f_x100,s_measure_x100\n";
    auto row = [&](const std::string& id, const MetricReport& r) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.4f,%.4f,%.4f,%.4f,%.4f\n", id.c_str(), r.mae,
                      r.dice, r.iou, r.boundary_f, r.s_measure, 100 * r.mae, 100 * r.dice,
                      100 * r.iou, 100 * r.boundary_f, 100 * r.s_measure);
        os << buf;
    };
    for (std::size_t i = 0; i < ids.size(); ++i) row(ids[i], eval.per_sample[i]);
    row("mean", eval.mean);
    return os.str();
}

}  // namespace dcr
