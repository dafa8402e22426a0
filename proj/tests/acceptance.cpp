// Acceptance gate: eight self-contained checks, one pass/fail line each.
// Exits nonzero if any check fails. All tolerances are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dcr/attention.hpp"
#include "dcr/checkpoint.hpp"
#include "dcr/gradcheck.hpp"
#include "dcr/memory.hpp"
#include "dcr/metrics.hpp"
#include "dcr/rng.hpp"
#include "dcr/trainer.hpp"

using namespace dcr;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances and budgets ----
constexpr double kTolEq23 = 1e-5;        // Eqs. 2-3 vs triple-loop oracle
constexpr double kTolEq1 = 1e-6;         // Eq. 1 vs oracle
constexpr double kTolSoftmaxSum = 1e-5;  // attention row normalization
constexpr double kHullSlack = 1e-6;      // convex-combination bound slack
constexpr double kTolMetric = 1e-6;      // MAE/Dice/IoU/boundary-F oracles
constexpr double kTolSMeasure = 1e-4;    // vs second independent implementation
constexpr double kSmokeDice = 0.80;      // training smoke gate, test split
constexpr double kSmokeBudgetSec = 900.0;
constexpr double kAblationMarginDice = 0.01;  // full vs backbone, 1 Dice point
constexpr double kAblateBudgetSec = 3600.0;

double now_sec() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

fs::path work_dir() {
    const fs::path p = fs::temp_directory_path() / "dcr_acceptance";
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------- 1. gradient fidelity ----------
bool criterion_gradients(std::string& detail) {
    const auto reports = run_standard_grad_checks(1);
    double worst = 0.0;
    std::string worst_name;
    bool ok = true;
    for (const auto& r : reports) {
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            worst_name = r.name;
        }
        ok = ok && r.pass;
    }
    std::ostringstream os;
    os << reports.size() << " checks, worst " << worst_name << " err " << worst;
    detail = os.str();
    return ok && !reports.empty();
}

// ---------- 2. equation oracles ----------
std::vector<double> oracle_region_embedding(const Tensor& a, const Tensor& m) {
    const std::int64_t B = a.dim(0), C = a.dim(1), H = a.dim(2), W = a.dim(3);
    std::vector<double> e(static_cast<std::size_t>(B * C), 0.0);
    for (std::int64_t b = 0; b < B; ++b) {
        double denom = 1e-6;
        for (std::int64_t i = 0; i < H * W; ++i) denom += m.at(b * H * W + i);
        for (std::int64_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::int64_t i = 0; i < H * W; ++i) {
                acc += m.at(b * H * W + i) * a.at(((b * C + c) * H * W) + i);
            }
            e[b * C + c] = acc / denom;
        }
    }
    return e;
}

std::vector<double> oracle_cross_attention(const Tensor& bank, const Tensor& feats) {
    const std::int64_t S = bank.dim(0), C = bank.dim(1);
    const std::int64_t B = feats.dim(0), H = feats.dim(2), W = feats.dim(3);
    std::vector<double> out(static_cast<std::size_t>(H * W * B * S), 0.0);
    for (std::int64_t i = 0; i < H * W; ++i) {
        for (std::int64_t b = 0; b < B; ++b) {
            std::vector<double> logits(static_cast<std::size_t>(S), 0.0);
            double mx = -1e300;
            for (std::int64_t s = 0; s < S; ++s) {
                double dot = 0.0;
                for (std::int64_t c = 0; c < C; ++c) {
                    dot += bank.at(s * C + c) * feats.at((b * C + c) * H * W + i);
                }
                logits[s] = dot;
                mx = std::max(mx, dot);
            }
            double z = 0.0;
            for (double& l : logits) {
                l = std::exp(l - mx);
                z += l;
            }
            for (std::int64_t s = 0; s < S; ++s) out[(i * B + b) * S + s] = logits[s] / z;
        }
    }
    return out;
}

std::vector<double> oracle_augment(const Tensor& x, const Tensor& bank, std::int64_t H,
                                   std::int64_t W) {
    const std::int64_t S = bank.dim(0), C = bank.dim(1), B = x.dim(1);
    std::vector<double> out(static_cast<std::size_t>(B * C * H * W), 0.0);
    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t c = 0; c < C; ++c) {
            for (std::int64_t i = 0; i < H * W; ++i) {
                double acc = 0.0;
                for (std::int64_t s = 0; s < S; ++s) {
                    acc += x.at((i * B + b) * S + s) * bank.at(s * C + c);
                }
                out[(b * C + c) * H * W + i] = acc;
            }
        }
    }
    return out;
}

bool criterion_equations(std::string& detail) {
    Rng rng(2);
    double worst23 = 0.0, worst1 = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::int64_t B = rng.uniform_int(1, 3), S = rng.uniform_int(1, 6);
        const std::int64_t C = rng.uniform_int(1, 8), H = rng.uniform_int(1, 5);
        const Tensor bank = rand_tensor({S, C}, rng);
        const Tensor feats = rand_tensor({B, C, H, H}, rng);
        const Tensor mask = rand_tensor({B, 1, H, H}, rng, 0.0, 1.0);

        const Tensor e = region_embedding(feats, mask);
        const auto eo = oracle_region_embedding(feats, mask);
        for (std::int64_t i = 0; i < e.size(); ++i) {
            worst1 = std::max(worst1, std::fabs(e.at(i) - eo[i]));
        }

        const Tensor att = cross_attention(bank, feats);
        const auto ao = oracle_cross_attention(bank, feats);
        for (std::int64_t i = 0; i < att.size(); ++i) {
            worst23 = std::max(worst23, std::fabs(att.at(i) - ao[i]));
        }
        const Tensor aug = augment(att, bank, H, H);
        const auto go = oracle_augment(att, bank, H, H);
        for (std::int64_t i = 0; i < aug.size(); ++i) {
            worst23 = std::max(worst23, std::fabs(aug.at(i) - go[i]));
        }
    }
    std::ostringstream os;
    os << "worst |err| eq2/3 " << worst23 << " (tol " << kTolEq23 << "), eq1 " << worst1
       << " (tol " << kTolEq1 << ")";
    detail = os.str();
    return worst23 <= kTolEq23 && worst1 <= kTolEq1;
}

// ---------- 3. memory laws ----------
bool criterion_memory(std::string& detail) {
    struct Entry {
        std::vector<double> row;
        std::int64_t step;
    };
    const std::pair<std::int64_t, std::int64_t> settings[] = {{20, 4}, {40, 4}, {7, 3}};
    Rng rng(3);
    for (auto [S, B] : settings) {
        RegionMemory mem(S);
        std::vector<Entry> reference;  // unbounded push log
        const std::int64_t C = 5;
        for (int step = 1; step <= 60; ++step) {
            const Tensor batch = rand_tensor({B, C}, rng);
            mem.push_batch(batch);
            for (std::int64_t b = 0; b < B; ++b) {
                Entry e;
                e.step = step;
                for (std::int64_t c = 0; c < C; ++c) e.row.push_back(batch.at(b * C + c));
                reference.push_back(std::move(e));
            }
            // FIFO law: memory equals the last min(S, total) pushed rows, in order
            const std::int64_t expect =
                std::min<std::int64_t>(S, static_cast<std::int64_t>(reference.size()));
            if (mem.size() != expect) {
                detail = "size mismatch";
                return false;
            }
            const Tensor snap = mem.snapshot();
            const std::size_t base = reference.size() - static_cast<std::size_t>(expect);
            const std::int64_t staleness_bound = (S + B - 1) / B;
            for (std::int64_t i = 0; i < expect; ++i) {
                const Entry& e = reference[base + static_cast<std::size_t>(i)];
                for (std::int64_t c = 0; c < C; ++c) {
                    if (snap.at(i * C + c) != e.row[c]) {
                        detail = "content/order mismatch";
                        return false;
                    }
                }
                if (step - e.step >= staleness_bound + 1) {
                    detail = "staleness bound violated";
                    return false;
                }
            }
        }
    }
    detail = "FIFO order, content, and staleness bound over (20,4),(40,4),(7,3) x 60 steps";
    return true;
}

// ---------- 4. normalization and hull properties ----------
bool criterion_hull(std::string& detail) {
    Rng rng(4);
    double worst_sum = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::int64_t B = rng.uniform_int(1, 3), S = rng.uniform_int(1, 6);
        const std::int64_t C = rng.uniform_int(1, 6), H = rng.uniform_int(1, 4);
        const Tensor bank = rand_tensor({S, C}, rng, -2.0, 2.0);
        const Tensor feats = rand_tensor({B, C, H, H}, rng, -2.0, 2.0);
        const Tensor att = cross_attention(bank, feats);
        for (std::int64_t row = 0; row < H * H * B; ++row) {
            double sum = 0.0;
            for (std::int64_t s = 0; s < S; ++s) sum += att.at(row * S + s);
            worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
        }
        // augment outputs stay inside the per-channel hull of the bank rows
        const Tensor aug = augment(att, bank, H, H);
        for (std::int64_t c = 0; c < C; ++c) {
            double lo = 1e300, hi = -1e300;
            for (std::int64_t s = 0; s < S; ++s) {
                lo = std::min(lo, bank.at(s * C + c));
                hi = std::max(hi, bank.at(s * C + c));
            }
            for (std::int64_t b = 0; b < B; ++b) {
                for (std::int64_t i = 0; i < H * H; ++i) {
                    const double v = aug.at((b * C + c) * H * H + i);
                    if (v < lo - kHullSlack || v > hi + kHullSlack) {
                        detail = "augment output escaped the bank hull";
                        return false;
                    }
                }
            }
        }
        // region embedding stays inside the per-channel hull of pixel features
        // (its weights are non-negative and sum to <= 1; 0 is in the hull)
        const Tensor mask = rand_tensor({B, 1, H, H}, rng, 0.0, 1.0);
        const Tensor e = region_embedding(feats, mask);
        for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t c = 0; c < C; ++c) {
                double lo = 0.0, hi = 0.0;
                for (std::int64_t i = 0; i < H * H; ++i) {
                    const double v = feats.at((b * C + c) * H * H + i);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                const double v = e.at(b * C + c);
                if (v < lo - kHullSlack || v > hi + kHullSlack) {
                    detail = "region embedding escaped the feature hull";
                    return false;
                }
            }
        }
    }
    std::ostringstream os;
    os << "1000 instances, worst softmax row-sum deviation " << worst_sum << " (tol "
       << kTolSoftmaxSum << ")";
    detail = os.str();
    return worst_sum <= kTolSoftmaxSum;
}

// ---------- 5. metric oracles ----------
double oracle_mae(const Tensor& p, const Tensor& g) {
    double s = 0.0;
    for (std::int64_t i = 0; i < p.size(); ++i) s += std::fabs(p.at(i) - g.at(i));
    return s / static_cast<double>(p.size());
}

std::pair<double, double> oracle_dice_iou(const Tensor& p, const Tensor& g) {
    long np = 0, ng = 0, ni = 0;
    for (std::int64_t i = 0; i < p.size(); ++i) {
        const bool a = p.at(i) >= 0.5, b = g.at(i) >= 0.5;
        np += a;
        ng += b;
        ni += a && b;
    }
    if (np + ng == 0) return {1.0, 1.0};
    return {2.0 * ni / double(np + ng), double(ni) / double(np + ng - ni)};
}

double oracle_boundary_f(const Tensor& pm, const Tensor& gm, std::int64_t tol) {
    const std::int64_t h = pm.dim(pm.rank() - 2), w = pm.dim(pm.rank() - 1);
    auto boundary = [&](const Tensor& m) {
        std::vector<std::pair<std::int64_t, std::int64_t>> pts;
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                if (m.at(y * w + x) < 0.5) continue;
                bool b = y == 0 || y == h - 1 || x == 0 || x == w - 1;
                if (!b && m.at((y - 1) * w + x) < 0.5) b = true;
                if (!b && m.at((y + 1) * w + x) < 0.5) b = true;
                if (!b && m.at(y * w + x - 1) < 0.5) b = true;
                if (!b && m.at(y * w + x + 1) < 0.5) b = true;
                if (b) pts.emplace_back(y, x);
            }
        }
        return pts;
    };
    const auto bp = boundary(pm), bg = boundary(gm);
    if (bp.empty() && bg.empty()) return 1.0;
    if (bp.empty() || bg.empty()) return 0.0;
    auto matched = [&](const auto& from, const auto& to) {
        long hits = 0;
        for (auto [y, x] : from) {
            for (auto [yy, xx] : to) {
                if ((y - yy) * (y - yy) + (x - xx) * (x - xx) <= tol * tol) {
                    ++hits;
                    break;
                }
            }
        }
        return hits;
    };
    const double prec = double(matched(bp, bg)) / double(bp.size());
    const double rec = double(matched(bg, bp)) / double(bg.size());
    if (prec + rec == 0.0) return 0.0;
    return 2.0 * prec * rec / (prec + rec);
}

// Second independently written structure measure following the published
// definition (object term with sample std, region term split at the
// ground-truth centroid with area-weighted SSIM blocks).
double oracle_s_measure(const Tensor& pred, const Tensor& gt) {
    const std::int64_t h = pred.dim(pred.rank() - 2), w = pred.dim(pred.rank() - 1);
    const std::int64_t n = h * w;
    const double eps = 2.220446049250313e-16;
    const auto& p = pred.values();
    const auto& g = gt.values();
    const double mu = std::accumulate(g.begin(), g.end(), 0.0) / double(n);
    const double pm = std::accumulate(p.begin(), p.end(), 0.0) / double(n);
    if (mu == 0.0) return 1.0 - pm;
    if (mu == 1.0) return pm;

    auto object_half = [&](bool fg) {
        std::vector<double> xs;
        for (std::int64_t i = 0; i < n; ++i) {
            if ((g[i] >= 0.5) == fg) xs.push_back(fg ? p[i] : 1.0 - p[i]);
        }
        if (xs.empty()) return 0.0;
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
        double sd = 0.0;
        if (xs.size() > 1) {
            double acc = 0.0;
            for (double x : xs) acc += (x - mean) * (x - mean);
            sd = std::sqrt(acc / double(xs.size() - 1));
        }
        return 2.0 * mean / (mean * mean + 1.0 + sd + eps);
    };
    const double s_obj = mu * object_half(true) + (1.0 - mu) * object_half(false);

    double sx = 0.0, sy = 0.0, sg = 0.0;
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            sx += g[y * w + x] * double(x + 1);
            sy += g[y * w + x] * double(y + 1);
            sg += g[y * w + x];
        }
    }
    const std::int64_t xs = std::llround(sx / sg);
    const std::int64_t ys = std::llround(sy / sg);

    auto ssim_block = [&](const std::vector<double>& a, const std::vector<double>& b) {
        const double m = double(a.size());
        if (m == 0.0) return 0.0;
        const double ma = std::accumulate(a.begin(), a.end(), 0.0) / m;
        const double mb = std::accumulate(b.begin(), b.end(), 0.0) / m;
        double va = 0.0, vb = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
            cov += (a[i] - ma) * (b[i] - mb);
        }
        va /= m - 1.0 + eps;
        vb /= m - 1.0 + eps;
        cov /= m - 1.0 + eps;
        const double num = 4.0 * ma * mb * cov;
        const double den = (ma * ma + mb * mb) * (va + vb);
        if (num != 0.0) return num / (den + eps);
        return den == 0.0 ? 1.0 : 0.0;
    };
    double s_reg = 0.0;
    const std::int64_t y0[4] = {0, 0, ys, ys};
    const std::int64_t x0[4] = {0, xs, 0, xs};
    const std::int64_t y1[4] = {ys, ys, h, h};
    const std::int64_t x1[4] = {xs, w, xs, w};
    for (int q = 0; q < 4; ++q) {
        std::vector<double> pa, ga;
        for (std::int64_t y = y0[q]; y < y1[q]; ++y) {
            for (std::int64_t x = x0[q]; x < x1[q]; ++x) {
                pa.push_back(p[y * w + x]);
                ga.push_back(g[y * w + x]);
            }
        }
        if (pa.empty()) continue;
        s_reg += (double(pa.size()) / double(n)) * ssim_block(pa, ga);
    }
    return 0.5 * s_obj + 0.5 * s_reg;
}

bool criterion_metrics(std::string& detail) {
    Rng rng(5);
    double worst = 0.0, worst_s = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> pv(16 * 16), gv(16 * 16);
        for (double& x : pv) x = rng.uniform(0.0, 1.0);
        for (double& x : gv) x = rng.uniform(0.0, 1.0) < 0.4 ? 1.0 : 0.0;
        const Tensor p(Shape{16, 16}, std::move(pv));
        const Tensor g(Shape{16, 16}, std::move(gv));

        worst = std::max(worst, std::fabs(metric_mae(p, g) - oracle_mae(p, g)));
        auto [d, i] = metric_dice_iou(p, g);
        auto [od, oi] = oracle_dice_iou(p, g);
        worst = std::max({worst, std::fabs(d - od), std::fabs(i - oi)});
        if (d < i) {
            detail = "dice < iou";
            return false;
        }
        std::vector<double> bin(16 * 16);
        for (std::int64_t k = 0; k < 256; ++k) bin[k] = p.at(k) >= 0.5 ? 1.0 : 0.0;
        const Tensor pb(Shape{16, 16}, std::move(bin));
        worst = std::max(worst,
                         std::fabs(metric_boundary_f(pb, g, 2) - oracle_boundary_f(pb, g, 2)));
        worst_s = std::max(worst_s, std::fabs(metric_s_measure(p, g) - oracle_s_measure(p, g)));
    }
    std::ostringstream os;
    os << "100 mask pairs, worst |err| " << worst << " (tol " << kTolMetric << "), s-measure "
       << worst_s << " (tol " << kTolSMeasure << ")";
    detail = os.str();
    return worst <= kTolMetric && worst_s <= kTolSMeasure;
}

// ---------- 6. training smoke gate ----------
RunConfig desk_preset(const fs::path& out, std::uint64_t seed) {
    RunConfig cfg;
    cfg.synth.count = 300;  // splits to 200 train / 50 val / 50 test
    cfg.synth.height = 64;
    cfg.synth.width = 64;
    cfg.synth.seed = seed;
    cfg.net.height = 64;
    cfg.net.width = 64;
    cfg.net.memory_capacity = 20;
    cfg.net.seed = seed;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-4;
    cfg.epochs = 15;
    cfg.seed = seed;
    cfg.out_dir = out.string();
    return cfg;
}

bool criterion_smoke(std::string& detail) {
    const double t0 = now_sec();
    const fs::path out = work_dir() / "smoke";
    fs::remove_all(out);
    RunConfig cfg = desk_preset(out, 0);
    const TrainResult train = train_run(cfg);

    RunConfig ev = cfg;
    ev.checkpoint_path = train.best_checkpoint;
    ev.out_dir = (out / "eval").string();
    const EvalResult eval = eval_run(ev);
    const double elapsed = now_sec() - t0;

    std::ostringstream os;
    os << "test dice " << eval.evaluation.mean.dice << " (gate " << kSmokeDice << "), "
       << elapsed << " s (budget " << kSmokeBudgetSec << ")";
    detail = os.str();
    return eval.evaluation.mean.dice >= kSmokeDice && elapsed <= kSmokeBudgetSec;
}

// ---------- 7. ablation direction ----------
bool criterion_ablation(std::string& detail) {
    const double t0 = now_sec();
    const fs::path out = work_dir() / "ablation";
    fs::remove_all(out);

    RunConfig cfg;  // reduced preset so 12 runs fit the budget
    cfg.synth.count = 120;
    cfg.synth.height = 48;
    cfg.synth.width = 48;
    cfg.synth.prototypes = 3;  // strong contour co-occurrence across images
    cfg.net.height = 48;
    cfg.net.width = 48;
    cfg.net.stage_channels = {8, 16, 32, 64};
    cfg.net.memory_capacity = 20;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-4;
    cfg.epochs = 8;
    cfg.ablate_seeds = 3;
    cfg.seed = 0;
    cfg.out_dir = out.string();

    const std::vector<AblationRow> rows = ablate_run(cfg);
    const double elapsed = now_sec() - t0;
    std::printf("    %s\n", ablation_csv(rows).c_str());

    double backbone = 0.0, full = 0.0;
    for (const auto& r : rows) {
        if (!r.icr && !r.ecr && !r.rom) backbone = r.dice_mean;
        if (r.icr && r.ecr && r.rom) full = r.dice_mean;
    }
    std::ostringstream os;
    os << "full " << full << " vs backbone " << backbone << " (margin "
       << kAblationMarginDice << "), " << elapsed << " s (budget " << kAblateBudgetSec << ")";
    detail = os.str();
    return full >= backbone + kAblationMarginDice && elapsed <= kAblateBudgetSec;
}

// ---------- 8. determinism and persistence ----------
bool criterion_determinism(std::string& detail) {
    const fs::path out = work_dir() / "determinism";
    fs::remove_all(out);

    RunConfig cfg;
    cfg.synth.count = 72;  // 48 train -> 12 steps per epoch
    cfg.synth.height = 32;
    cfg.synth.width = 32;
    cfg.net.height = 32;
    cfg.net.width = 32;
    cfg.net.stage_channels = {4, 8, 16, 32};
    cfg.net.memory_capacity = 8;
    cfg.batch_size = 4;
    cfg.epochs = 1;
    cfg.seed = 11;
    cfg.net.seed = 11;
    cfg.synth.seed = 11;

    cfg.out_dir = (out / "a").string();
    const TrainResult a = train_run(cfg);
    cfg.out_dir = (out / "b").string();
    const TrainResult b = train_run(cfg);
    if (a.step_losses.size() < 10 || b.step_losses.size() < 10) {
        detail = "too few steps";
        return false;
    }
    for (int i = 0; i < 10; ++i) {
        if (a.step_losses[i] != b.step_losses[i]) {  // bitwise
            detail = "step losses diverged";
            return false;
        }
    }

    // checkpoint round trip through a differently initialized network
    Network net(cfg.net);
    load_checkpoint(net, a.final_checkpoint);
    const fs::path resaved = out / "resaved.ckpt";
    save_checkpoint(net, resaved.string());
    if (read_file(a.final_checkpoint) != read_file(resaved)) {
        detail = "checkpoint round trip not byte-identical";
        return false;
    }

    RunConfig ev = cfg;
    ev.checkpoint_path = a.final_checkpoint;
    ev.out_dir = (out / "e1").string();
    const EvalResult e1 = eval_run(ev);
    ev.out_dir = (out / "e2").string();
    const EvalResult e2 = eval_run(ev);
    if (e1.csv != e2.csv) {
        detail = "eval CSV not byte-stable";
        return false;
    }
    detail = "10 losses bitwise, checkpoint byte-identical, eval CSV byte-stable";
    return true;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        bool (*fn)(std::string&);
    };
    const Criterion criteria[] = {
        {"1 gradient fidelity", criterion_gradients},
        {"2 equation oracles", criterion_equations},
        {"3 memory laws", criterion_memory},
        {"4 normalization and hull", criterion_hull},
        {"5 metric oracles", criterion_metrics},
        {"6 training smoke gate", criterion_smoke},
        {"7 ablation direction", criterion_ablation},
        {"8 determinism and persistence", criterion_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %s: %s — %s\n", c.name, ok ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
