#include <cmath>
#include <utility>

#include "dcr/attention.hpp"
#include "dcr/gradcheck.hpp"
#include "dcr/losses.hpp"
#include "dcr/network.hpp"
#include "dcr/rng.hpp"

namespace dcr {

namespace {

constexpr double kPrimitiveTol = 1e-3;
constexpr double kNetworkTol = 2e-3;
constexpr double kStep = 1e-4;
// Smaller step for the end-to-end check: the composed network crosses more
// ReLU kinks, whose finite-difference error shrinks linearly with the step.
constexpr double kNetStep = 1e-6;

Tensor rand_tensor(Shape shape, Rng& rng, double lo, double hi) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

// Values with |x| >= min_mag: keeps relu/abs kinks away from the probes.
Tensor rand_signed(Shape shape, Rng& rng, double min_mag, double max_mag) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (double& x : v) x = rng.uniform(min_mag, max_mag) * (rng.coin() ? 1.0 : -1.0);
    return Tensor(std::move(shape), std::move(v));
}

using TensorFn = std::function<Tensor(const Tensor&)>;

// Reduces g's output with a fixed random weighting so every output
// coordinate influences the checked scalar.
void check(std::vector<GradCheckReport>& out, const std::string& name, const TensorFn& g,
           const Tensor& x, Rng& rng, double tol = kPrimitiveTol) {
    HighPrecisionGuard precision;
    const Tensor probe = g(x);
    const Tensor w = rand_tensor(probe.shape(), rng, 0.25, 1.0);
    const ScalarFn f = [&](const Tensor& t) { return sum_all(mul(g(t), w)); };
    GradCheckReport r;
    r.name = name;
    r.tolerance = tol;
    r.max_rel_err = grad_check(f, x, kStep);
    r.pass = r.max_rel_err <= tol;
    out.push_back(std::move(r));
}

void check_elementwise(std::vector<GradCheckReport>& out, Rng& rng) {
    const Shape shapes[] = {{3}, {2, 3}, {2, 2, 3}};
    for (const Shape& s : shapes) {
        const Tensor x = rand_signed(s, rng, 0.2, 1.5);
        const Tensor pos = rand_tensor(s, rng, 0.4, 1.6);
        const Tensor other = rand_tensor(s, rng, 0.4, 1.6);
        const Tensor row = rand_tensor({s.back()}, rng, 0.4, 1.6);  // broadcast operand

        check(out, "add", [&](const Tensor& t) { return add(t, other); }, x, rng);
        check(out, "add.broadcast", [&](const Tensor& t) { return add(t, row); }, x, rng);
        check(out, "add.broadcast_rhs", [&](const Tensor& t) { return add(other, t); }, x, rng);
        check(out, "sub", [&](const Tensor& t) { return sub(t, other); }, x, rng);
        check(out, "mul", [&](const Tensor& t) { return mul(t, other); }, x, rng);
        check(out, "mul.broadcast", [&](const Tensor& t) { return mul(row, t); }, x, rng);
        check(out, "div", [&](const Tensor& t) { return div(t, other); }, x, rng);
        check(out, "div.denominator", [&](const Tensor& t) { return div(other, t); }, pos, rng);
        check(out, "scale", [&](const Tensor& t) { return scale(t, -1.7); }, x, rng);
        check(out, "add_scalar", [&](const Tensor& t) { return add_scalar(t, 0.3); }, x, rng);
        check(out, "neg", [&](const Tensor& t) { return neg(t); }, x, rng);
        check(out, "abs", [&](const Tensor& t) { return abs(t); }, x, rng);
        check(out, "exp", [&](const Tensor& t) { return exp(t); }, x, rng);
        check(out, "log", [&](const Tensor& t) { return log(t); }, pos, rng);
        check(out, "relu", [&](const Tensor& t) { return relu(t); }, x, rng);
        check(out, "sigmoid", [&](const Tensor& t) { return sigmoid(t); }, x, rng);
        check(out, "softplus", [&](const Tensor& t) { return softplus(t); }, x, rng);
        check(out, "sum_all", [&](const Tensor& t) { return sum_all(t); }, x, rng);
        check(out, "mean_all", [&](const Tensor& t) { return mean_all(t); }, x, rng);
        for (std::size_t axis = 0; axis < s.size(); ++axis) {
            check(out, "sum_axis." + std::to_string(axis),
                  [&](const Tensor& t) { return sum_axis(t, axis); }, x, rng);
            check(out, "softmax." + std::to_string(axis),
                  [&](const Tensor& t) { return softmax(t, axis); }, x, rng);
        }
    }
}

void check_shapes_and_linear(std::vector<GradCheckReport>& out, Rng& rng) {
    const Tensor a = rand_signed({3, 4}, rng, 0.2, 1.2);
    const Tensor b = rand_signed({4, 2}, rng, 0.2, 1.2);
    check(out, "matmul.lhs", [&](const Tensor& t) { return matmul(t, b); }, a, rng);
    check(out, "matmul.rhs", [&](const Tensor& t) { return matmul(a, t); }, b, rng);

    const Tensor ba = rand_signed({2, 3, 4}, rng, 0.2, 1.2);
    const Tensor bb = rand_signed({2, 4, 2}, rng, 0.2, 1.2);
    check(out, "bmm.lhs", [&](const Tensor& t) { return bmm(t, bb); }, ba, rng);
    check(out, "bmm.rhs", [&](const Tensor& t) { return bmm(ba, t); }, bb, rng);

    const Tensor x = rand_signed({2, 3, 4}, rng, 0.2, 1.2);
    check(out, "reshape", [&](const Tensor& t) { return reshape(t, {4, 6}); }, x, rng);
    check(out, "permute", [&](const Tensor& t) { return permute(t, {2, 0, 1}); }, x, rng);
    check(out, "transpose2d", [&](const Tensor& t) { return transpose2d(t); }, a, rng);
    const Tensor x2 = rand_signed({2, 2, 4}, rng, 0.2, 1.2);
    check(out, "concat.lhs", [&](const Tensor& t) { return concat(t, x2, 1); }, x, rng);
    check(out, "concat.rhs", [&](const Tensor& t) { return concat(x, t, 1); }, x2, rng);

    const Tensor fm = rand_signed({2, 3, 2, 4}, rng, 0.2, 1.2);
    check(out, "flatten_hw", [&](const Tensor& t) { return flatten_hw(t); }, fm, rng);
    const Tensor flat = rand_signed({2, 8, 3}, rng, 0.2, 1.2);
    check(out, "unflatten_hw", [&](const Tensor& t) { return unflatten_hw(t, 2, 4); }, flat, rng);
}

void check_nn(std::vector<GradCheckReport>& out, Rng& rng) {
    const Tensor x = rand_signed({2, 3, 4, 4}, rng, 0.2, 1.2);
    const Tensor w1 = rand_signed({2, 3, 1, 1}, rng, 0.2, 0.8);
    const Tensor w3 = rand_signed({2, 3, 3, 3}, rng, 0.2, 0.8);
    const Tensor bias = rand_signed({2}, rng, 0.2, 0.8);

    check(out, "conv2d.x.1x1", [&](const Tensor& t) { return conv2d(t, w1, &bias, 1, 0); }, x,
          rng);
    check(out, "conv2d.w.1x1", [&](const Tensor& t) { return conv2d(x, t, nullptr, 1, 0); }, w1,
          rng);
    check(out, "conv2d.x.3x3", [&](const Tensor& t) { return conv2d(t, w3, nullptr, 1, 1); }, x,
          rng);
    check(out, "conv2d.w.3x3", [&](const Tensor& t) { return conv2d(x, t, nullptr, 1, 1); }, w3,
          rng);
    check(out, "conv2d.x.stride2", [&](const Tensor& t) { return conv2d(t, w3, &bias, 2, 1); },
          x, rng);
    check(out, "conv2d.bias", [&](const Tensor& t) { return conv2d(x, w3, &t, 1, 1); }, bias,
          rng);

    const Tensor gamma = rand_tensor({3}, rng, 0.5, 1.5);
    const Tensor beta = rand_signed({3}, rng, 0.2, 0.8);
    check(out, "batch_norm.x",
          [&](const Tensor& t) {
              BatchNormState bn(3);
              return batch_norm(t, gamma, beta, bn, true);
          },
          x, rng);
    check(out, "batch_norm.gamma",
          [&](const Tensor& t) {
              BatchNormState bn(3);
              return batch_norm(x, t, beta, bn, true);
          },
          gamma, rng);
    check(out, "batch_norm.beta",
          [&](const Tensor& t) {
              BatchNormState bn(3);
              return batch_norm(x, gamma, t, bn, true);
          },
          beta, rng);

    check(out, "upsample_bilinear", [&](const Tensor& t) { return upsample_bilinear(t, 2); }, x,
          rng);
    check(out, "avg_pool.3x3", [&](const Tensor& t) { return avg_pool(t, 3, 1, 1); }, x, rng);
    check(out, "avg_pool.stride2", [&](const Tensor& t) { return avg_pool(t, 3, 2, 1); }, x,
          rng);
}

void check_blocks(std::vector<GradCheckReport>& out, Rng& rng) {
    const std::int64_t b = 2, c = 4, h = 6, w = 6, s = 5;
    const Tensor a = rand_signed({b, c, h, w}, rng, 0.2, 1.0);

    Rng init_rng(Rng::mix(17, 0xB10C));
    IcrParams icr = IcrParams::init(c, init_rng);
    icr.gamma = Tensor({1}, {0.5});  // off the identity point so the attention path matters
    check(out, "block.icr.input",
          [&](const Tensor& t) { return position_attention(t, icr); }, a, rng);
    check(out, "block.icr.wq",
          [&](const Tensor& t) {
              IcrParams p = icr;
              p.wq = t;
              return position_attention(a, p);
          },
          icr.wq, rng);
    check(out, "block.icr.wv",
          [&](const Tensor& t) {
              IcrParams p = icr;
              p.wv = t;
              return position_attention(a, p);
          },
          icr.wv, rng);
    check(out, "block.icr.gamma",
          [&](const Tensor& t) {
              IcrParams p = icr;
              p.gamma = t;
              return position_attention(a, p);
          },
          icr.gamma, rng);

    EcrParams ecr = EcrParams::init(c, init_rng);
    RegionMemory mem_master(s);
    mem_master.push_batch(rand_tensor({3, c}, rng, 0.1, 1.0));
    mem_master.push_batch(rand_tensor({3, c}, rng, 0.1, 1.0));

    check(out, "block.ecr.input",
          [&](const Tensor& t) {
              EcrParams p = ecr;
              RegionMemory mem = mem_master;
              EcrOutputs o = ecr_forward(t, p, &mem, true);
              // fold the coarse map in so psi gets a second gradient path
              return add(sum_all(o.y), mean_all(o.m));
          },
          a, rng);
    check(out, "block.ecr.psi_w",
          [&](const Tensor& t) {
              EcrParams p = ecr;
              p.psi_w = t;
              RegionMemory mem = mem_master;
              EcrOutputs o = ecr_forward(a, p, &mem, true);
              return add(sum_all(o.y), mean_all(o.m));
          },
          ecr.psi_w, rng);
    check(out, "block.ecr.memoryless",
          [&](const Tensor& t) {
              EcrParams p = ecr;
              return sum_all(ecr_forward(t, p, nullptr, true).y);
          },
          a, rng);

    const Tensor y2 = rand_signed({b, c, h, w}, rng, 0.2, 1.0);
    check(out, "block.fuse.lhs",
          [&](const Tensor& t) {
              EcrParams p = ecr;
              return fuse(t, y2, p, true);
          },
          a, rng);
    check(out, "block.fuse.w",
          [&](const Tensor& t) {
              EcrParams p = ecr;
              p.fuse_w = t;
              return fuse(a, y2, p, true);
          },
          ecr.fuse_w, rng);
}

// Central differences over a random 32-coordinate subsample of the full
// network's parameters, against the tape gradient of the composite loss.
void check_network(std::vector<GradCheckReport>& out, Rng& rng) {
    HighPrecisionGuard precision;

    NetworkConfig nc;
    nc.height = 32;
    nc.width = 32;
    nc.stage_channels = {4, 8, 16, 32};
    nc.memory_capacity = 5;
    nc.seed = 33;
    Network net(nc);

    const Tensor batch = rand_tensor({2, 3, 32, 32}, rng, 0.05, 0.95);
    std::vector<double> gt_v(2 * 32 * 32);
    for (double& v : gt_v) v = rng.coin() ? 1.0 : 0.0;
    const Tensor gt({2, 1, 32, 32}, std::move(gt_v));

    RegionMemory mem_master(nc.memory_capacity);
    mem_master.push_batch(rand_tensor({4, 32}, rng, 0.1, 1.0));

    auto eval_loss = [&]() {
        RegionMemory mem = mem_master;
        return total_loss(net.forward(batch, mem, true), gt).total;
    };

    std::unordered_map<std::string, std::vector<double>> analytic;
    {
        Tape tape;
        net.attach(tape);
        RegionMemory mem = mem_master;
        const LossReport loss = total_loss(net.forward(batch, mem, true), gt);
        tape.backward(loss.total_tensor);
        net.visit_params([&](const std::string& name, Tensor& p) {
            analytic[name] = tape.has_grad(p) ? tape.grad(p)
                                              : std::vector<double>(p.values().size(), 0.0);
        });
    }

    std::vector<std::pair<std::string, std::int64_t>> coords;
    net.visit_params([&](const std::string& name, Tensor& p) {
        coords.emplace_back(name, p.size());
    });

    auto set_coord = [&](const std::string& pname, std::int64_t idx, double value) {
        net.visit_params([&](const std::string& name, Tensor& p) {
            if (name == pname) {
                std::vector<double> v = p.values();
                v[idx] = value;
                p = Tensor(p.shape(), std::move(v));
            }
        });
    };

    double max_rel = 0.0;
    for (int k = 0; k < 32; ++k) {
        const auto& [pname, psize] =
            coords[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(coords.size()) - 1))];
        const std::int64_t idx = rng.uniform_int(0, psize - 1);
        double base = 0.0;
        net.visit_params([&](const std::string& name, Tensor& p) {
            if (name == pname) base = p.at(idx);
        });

        set_coord(pname, idx, base + kNetStep);
        const double up = eval_loss();
        set_coord(pname, idx, base - kNetStep);
        const double down = eval_loss();
        set_coord(pname, idx, base);

        const double numeric = (up - down) / (2 * kNetStep);
        const double a = analytic[pname][static_cast<std::size_t>(idx)];
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
#ifdef DCR_GRADCHECK_TRACE
        std::fprintf(stderr, "%s[%lld] analytic=%.9g numeric=%.9g rel=%.3e\n", pname.c_str(),
                     static_cast<long long>(idx), a, numeric,
                     std::fabs(a - numeric) / denom);
#endif
        max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }

    GradCheckReport r;
    r.name = "network.sampled32";
    r.tolerance = kNetworkTol;
    r.max_rel_err = max_rel;
    r.pass = max_rel <= kNetworkTol;
    out.push_back(std::move(r));
}

}  // namespace

std::vector<GradCheckReport> run_standard_grad_checks(std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0x96AD));
    std::vector<GradCheckReport> out;
    check_elementwise(out, rng);
    check_shapes_and_linear(out, rng);
    check_nn(out, rng);
    check_blocks(out, rng);
    check_network(out, rng);
    return out;
}

}  // namespace dcr
