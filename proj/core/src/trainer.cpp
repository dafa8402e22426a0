#include "dcr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dcr/adam.hpp"
#include "dcr/checkpoint.hpp"
#include "dcr/losses.hpp"
#include "dcr/ops.hpp"

namespace dcr {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

Tensor stack_images(const std::vector<const Sample*>& batch) {
    const Tensor& first = batch.front()->image;
    const std::int64_t c = first.dim(0), h = first.dim(1), w = first.dim(2);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(batch.size()) * first.values().size());
    for (const Sample* s : batch) {
        out.insert(out.end(), s->image.values().begin(), s->image.values().end());
    }
    return Tensor(Shape{static_cast<std::int64_t>(batch.size()), c, h, w}, std::move(out));
}

Tensor stack_masks(const std::vector<const Sample*>& batch) {
    const Tensor& first = batch.front()->mask;
    const std::int64_t h = first.dim(1), w = first.dim(2);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(batch.size()) * first.values().size());
    for (const Sample* s : batch) {
        out.insert(out.end(), s->mask.values().begin(), s->mask.values().end());
    }
    return Tensor(Shape{static_cast<std::int64_t>(batch.size()), 1, h, w}, std::move(out));
}

// Eval-mode probability maps, one [1 x H x W] tensor per sample.
std::vector<Tensor> forward_probs(Network& net, RegionMemory& mem,
                                  const std::vector<Sample>& samples, std::int64_t batch_size) {
    std::vector<Tensor> preds;
    preds.reserve(samples.size());
    for (std::size_t start = 0; start < samples.size();
         start += static_cast<std::size_t>(batch_size)) {
        std::vector<const Sample*> batch;
        for (std::size_t i = start;
             i < std::min(samples.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
            batch.push_back(&samples[i]);
        }
        const Tensor probs = sigmoid(net.forward(stack_images(batch), mem, false).final_map);
        const std::int64_t h = probs.dim(2), w = probs.dim(3);
        const auto plane = static_cast<std::size_t>(h * w);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            std::vector<double> v(probs.values().begin() + b * plane,
                                  probs.values().begin() + (b + 1) * plane);
            preds.emplace_back(Shape{1, h, w}, std::move(v));
        }
    }
    return preds;
}

DatasetEvaluation evaluate_split(Network& net, RegionMemory& mem,
                                 const std::vector<Sample>& samples, std::int64_t batch_size) {
    std::vector<Tensor> gts;
    gts.reserve(samples.size());
    for (const auto& s : samples) gts.push_back(s.mask);
    return evaluate_dataset(forward_probs(net, mem, samples, batch_size), gts);
}

}  // namespace

Splits prepare_data(const RunConfig& cfg) {
    std::vector<Sample> samples =
        cfg.dataset_dir.empty()
            ? synth_generate(cfg.synth)
            : load_dataset(cfg.dataset_dir, cfg.net.height, cfg.net.width);
    return split_dataset(std::move(samples), cfg.f_train, cfg.f_val, cfg.f_test,
                         cfg.synth.seed);
}

TrainResult train_run(const RunConfig& cfg) {
    cfg.validate();
    const Splits data = prepare_data(cfg);
    if (data.train.empty()) throw ConfigError("train: empty training split");
    if (data.val.empty()) throw ConfigError("train: empty validation split");

    fs::create_directories(cfg.out_dir);

    NetworkConfig nc = cfg.net;
    nc.seed = cfg.seed;
    Network net(nc);
    RegionMemory mem(cfg.net.memory_capacity);
    Adam opt(cfg.learning_rate);

    TrainResult result;
    result.best_checkpoint = (fs::path(cfg.out_dir) / "best.ckpt").string();
    result.final_checkpoint = (fs::path(cfg.out_dir) / "final.ckpt").string();
    result.best_val_dice = -1.0;

    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    std::ofstream log(fs::path(cfg.out_dir) / "train_log.csv");
    log << "epoch,train_total,train_wbce,train_dice,val_mae,val_dice,val_iou,"
           "val_boundary_f,val_s_measure\n";

    for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(cfg.seed ^ 0xE70C, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i))]);
        }

        double epoch_total = 0.0, epoch_wbce = 0.0, epoch_dice = 0.0;
        std::int64_t steps = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Sample> augmented;
            std::vector<const Sample*> batch;
            std::vector<std::string> batch_ids;
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = data.train[order[i]];
                batch_ids.push_back(s.id);
                if (cfg.augment) {
                    augmented.push_back(augment_sample(
                        s, Rng::mix(cfg.seed ^ 0xA46,
                                    (static_cast<std::uint64_t>(epoch) << 32) |
                                        static_cast<std::uint64_t>(order[i]))));
                } else {
                    augmented.push_back(s);
                }
            }
            for (const Sample& s : augmented) batch.push_back(&s);

            Tape tape;
            net.attach(tape);
            const ForwardOutputs out = net.forward(stack_images(batch), mem, true);
            const LossReport loss = total_loss(out, stack_masks(batch));
            if (!std::isfinite(loss.total)) {
                std::string ids;
                for (const auto& id : batch_ids) ids += (ids.empty() ? "" : ",") + id;
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " step " + std::to_string(steps + 1) + "; batch ids: " + ids);
            }
            tape.backward(loss.total_tensor);
            net.visit_params([&](const std::string& name, Tensor& p) {
                if (tape.has_grad(p)) opt.update(name, p, tape.grad(p));
            });

            result.step_losses.push_back(loss.total);
            epoch_total += loss.total;
            for (const auto& term : loss.per_map) {
                epoch_wbce += term.wbce;
                epoch_dice += term.dice;
            }
            ++steps;
        }

        EpochLog el;
        el.epoch = epoch;
        el.train_total = epoch_total / static_cast<double>(steps);
        el.train_wbce = epoch_wbce / static_cast<double>(steps);
        el.train_dice = epoch_dice / static_cast<double>(steps);
        el.val = evaluate_split(net, mem, data.val, cfg.batch_size).mean;
        result.epochs.push_back(el);

        log << epoch << "," << fmt(el.train_total) << "," << fmt(el.train_wbce) << ","
            << fmt(el.train_dice) << "," << fmt(el.val.mae) << "," << fmt(el.val.dice) << ","
            << fmt(el.val.iou) << "," << fmt(el.val.boundary_f) << ","
            << fmt(el.val.s_measure) << "\n"
            << std::flush;

        if (el.val.dice > result.best_val_dice) {
            result.best_val_dice = el.val.dice;
            result.best_epoch = epoch;
            save_checkpoint(net, result.best_checkpoint);
        }
    }

    save_checkpoint(net, result.final_checkpoint);

    std::ofstream summary(fs::path(cfg.out_dir) / "summary.txt");
    summary << "epochs: " << cfg.epochs << "\n"
            << "train samples: " << data.train.size() << "\n"
            << "val samples: " << data.val.size() << "\n"
            << "test samples: " << data.test.size() << "\n"
            << "best val dice: " << fmt(result.best_val_dice) << " (epoch " << result.best_epoch
            << ")\n"
            << "best checkpoint: " << result.best_checkpoint << "\n"
            << "final checkpoint: " << result.final_checkpoint << "\n";
    return result;
}

EvalResult eval_run(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.checkpoint_path.empty()) throw ConfigError("eval: checkpoint path required");
    const Splits data = prepare_data(cfg);
    if (data.test.empty()) throw ConfigError("eval: empty test split");

    NetworkConfig nc = cfg.net;
    nc.seed = cfg.seed;
    Network net(nc);
    load_checkpoint(net, cfg.checkpoint_path);
    RegionMemory mem(cfg.net.memory_capacity);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Tensor> preds = forward_probs(net, mem, data.test, cfg.batch_size);
    const auto t1 = std::chrono::steady_clock::now();

    std::vector<Tensor> gts;
    std::vector<std::string> ids;
    for (const auto& s : data.test) {
        gts.push_back(s.mask);
        ids.push_back(s.id);
    }

    EvalResult result;
    result.evaluation = evaluate_dataset(preds, gts);
    result.ids = std::move(ids);
    result.csv = metrics_csv(result.evaluation, result.ids);
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    result.samples_per_sec = secs > 0.0 ? static_cast<double>(data.test.size()) / secs : 0.0;

    fs::create_directories(cfg.out_dir);
    std::ofstream(fs::path(cfg.out_dir) / "eval_metrics.csv", std::ios::binary) << result.csv;
    std::ofstream summary(fs::path(cfg.out_dir) / "eval_summary.txt");
    summary << "checkpoint: " << cfg.checkpoint_path << "\n"
            << "test samples: " << data.test.size() << "\n"
            << "mean dice: " << fmt(result.evaluation.mean.dice) << "\n"
            << "mean iou: " << fmt(result.evaluation.mean.iou) << "\n"
            << "throughput (samples/sec): " << fmt(result.samples_per_sec, "%.2f") << "\n";
    return result;
}

std::vector<AblationRow> ablate_run(const RunConfig& cfg) {
    cfg.validate();
    struct Variant {
        const char* name;
        bool icr, ecr, rom;
    };
    const Variant variants[] = {
        {"backbone", false, false, false},
        {"backbone+icr", true, false, false},
        {"backbone+ecr", false, true, false},
        {"backbone+icr+ecr+rom", true, true, true},
    };

    std::vector<AblationRow> rows;
    for (const Variant& v : variants) {
        std::vector<double> dices, ious;
        for (int k = 0; k < cfg.ablate_seeds; ++k) {
            RunConfig rc = cfg;
            rc.seed = cfg.seed + static_cast<std::uint64_t>(k);
            rc.net.use_icr = v.icr;
            rc.net.use_ecr = v.ecr;
            rc.net.use_rom = v.rom;
            rc.out_dir = (fs::path(cfg.out_dir) / (std::string(v.name) + "_seed" +
                                                   std::to_string(rc.seed)))
                             .string();
            const TrainResult tr = train_run(rc);

            NetworkConfig nc = rc.net;
            nc.seed = rc.seed;
            Network net(nc);
            load_checkpoint(net, tr.best_checkpoint);
            RegionMemory mem(rc.net.memory_capacity);
            const Splits data = prepare_data(rc);
            const DatasetEvaluation ev = evaluate_split(net, mem, data.test, rc.batch_size);
            dices.push_back(ev.mean.dice);
            ious.push_back(ev.mean.iou);
        }
        auto mean_sd = [](const std::vector<double>& xs) {
            const double mean =
                std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            const double sd =
                xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
            return std::pair<double, double>(mean, sd);
        };
        AblationRow row;
        row.variant = v.name;
        row.icr = v.icr;
        row.ecr = v.ecr;
        row.rom = v.rom;
        std::tie(row.dice_mean, row.dice_sd) = mean_sd(dices);
        std::tie(row.iou_mean, row.iou_sd) = mean_sd(ious);
        rows.push_back(row);
    }

    fs::create_directories(cfg.out_dir);
    std::ofstream(fs::path(cfg.out_dir) / "ablation.csv", std::ios::binary)
        << ablation_csv(rows);
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "variant,icr,ecr,rom,dice_mean,dice_sd,iou_mean,iou_sd\n";
    for (const auto& r : rows) {
        out += r.variant;
        out += r.icr ? ",1" : ",0";
        out += r.ecr ? ",1" : ",0";
        out += r.rom ? ",1" : ",0";
        out += "," + fmt(r.dice_mean) + "," + fmt(r.dice_sd) + "," + fmt(r.iou_mean) + "," +
               fmt(r.iou_sd) + "\n";
    }
    return out;
}

}  // namespace dcr
