#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "dcr/config.hpp"
#include "dcr/data.hpp"
#include "dcr/gradcheck.hpp"
#include "dcr/trainer.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir;
    std::string checkpoint;
    std::int64_t seed = -1;  // -1 = keep config value
};

dcr::RunConfig make_config(const CliArgs& args) {
    dcr::RunConfig cfg = dcr::load_run_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.checkpoint.empty()) cfg.checkpoint_path = args.checkpoint;
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    return cfg;
}

void add_common(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "run seed (overrides config)");
    cmd->add_option("--checkpoint", args.checkpoint, "checkpoint path");
}

int run_train(const CliArgs& args) {
    const dcr::RunConfig cfg = make_config(args);
    const dcr::TrainResult r = dcr::train_run(cfg);
    std::printf("trained %zu epochs, best val dice %.4f (epoch %lld)\n", r.epochs.size(),
                r.best_val_dice, static_cast<long long>(r.best_epoch));
    std::printf("best checkpoint: %s\n", r.best_checkpoint.c_str());
    return 0;
}

int run_eval(const CliArgs& args) {
    const dcr::RunConfig cfg = make_config(args);
    const dcr::EvalResult r = dcr::eval_run(cfg);
    std::printf("test samples: %zu\n", r.ids.size());
    std::printf("mean mae %.4f dice %.4f iou %.4f boundary_f %.4f s_measure %.4f\n",
                r.evaluation.mean.mae, r.evaluation.mean.dice, r.evaluation.mean.iou,
                r.evaluation.mean.boundary_f, r.evaluation.mean.s_measure);
    std::printf("throughput: %.2f samples/sec\n", r.samples_per_sec);
    return 0;
}

int run_gradcheck(const CliArgs& args) {
    const dcr::RunConfig cfg = make_config(args);
    const auto reports = dcr::run_standard_grad_checks(cfg.seed);
    int failures = 0;
    for (const auto& r : reports) {
        std::printf("%-24s max_rel_err %.3e tol %.1e %s\n", r.name.c_str(), r.max_rel_err,
                    r.tolerance, r.pass ? "pass" : "FAIL");
        if (!r.pass) ++failures;
    }
    std::printf("%zu checks, %d failures\n", reports.size(), failures);
    return failures == 0 ? 0 : 1;
}

int run_synth(const CliArgs& args) {
    const dcr::RunConfig cfg = make_config(args);
    dcr::SynthConfig sc = cfg.synth;
    if (args.seed >= 0) sc.seed = cfg.seed;
    const auto samples = dcr::synth_generate(sc);
    dcr::save_dataset(samples, cfg.out_dir);
    std::printf("wrote %zu samples to %s\n", samples.size(), cfg.out_dir.c_str());
    return 0;
}

int run_ablate(const CliArgs& args) {
    const dcr::RunConfig cfg = make_config(args);
    const auto rows = dcr::ablate_run(cfg);
    std::printf("%s", dcr::ablation_csv(rows).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DCRNet: contextual-relation segmentation trainer"};
    app.require_subcommand(1);

    CliArgs args;
    CLI::App* train = app.add_subcommand("train", "train a model");
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "run the gradient-check suite");
    CLI::App* synth = app.add_subcommand("synth", "emit a synthetic dataset");
    CLI::App* ablate = app.add_subcommand("ablate", "train and compare the ablation variants");
    for (CLI::App* cmd : {train, eval, gradcheck, synth, ablate}) add_common(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(args);
        if (eval->parsed()) return run_eval(args);
        if (gradcheck->parsed()) return run_gradcheck(args);
        if (synth->parsed()) return run_synth(args);
        if (ablate->parsed()) return run_ablate(args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
