#include "dcr/attention.hpp"

#include <cmath>

namespace dcr {

Tensor init_conv_weight(std::int64_t cout, std::int64_t cin, std::int64_t kh, std::int64_t kw,
                        Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin * kh * kw));
    std::vector<double> w(static_cast<std::size_t>(cout * cin * kh * kw));
    for (auto& v : w) v = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
    return Tensor(Shape{cout, cin, kh, kw}, std::move(w));
}

IcrParams IcrParams::init(std::int64_t channels, Rng& rng) {
    const std::int64_t reduced = std::max<std::int64_t>(channels / 8, 1);
    IcrParams p;
    p.wq = init_conv_weight(reduced, channels, 1, 1, rng);
    p.wk = init_conv_weight(reduced, channels, 1, 1, rng);
    p.wv = init_conv_weight(channels, channels, 1, 1, rng);
    p.gamma = Tensor::zeros({1});
    return p;
}

EcrParams EcrParams::init(std::int64_t channels, Rng& rng) {
    EcrParams p;
    p.psi_w = init_conv_weight(1, channels, 1, 1, rng);
    p.psi_gamma = Tensor::full({1}, 1.0);
    p.psi_beta = Tensor::zeros({1});
    p.psi_bn = BatchNormState(1);
    p.fuse_w = init_conv_weight(channels, 2 * channels, 3, 3, rng);
    // Bias the fuse toward passing the first input through at start: an
    // identity center tap keeps early training close to the un-fused path
    // while the contextual branch is still settling.
    {
        std::vector<double> w = p.fuse_w.values();
        const std::int64_t cin = 2 * channels;
        for (std::int64_t c = 0; c < channels; ++c) {
            const std::size_t idx = static_cast<std::size_t>(((c * cin + c) * 3 + 1) * 3 + 1);
            w[idx] = static_cast<double>(static_cast<float>(w[idx] + 1.0));
        }
        p.fuse_w = Tensor(p.fuse_w.shape(), std::move(w));
    }
    p.fuse_gamma = Tensor::full({channels}, 1.0);
    p.fuse_beta = Tensor::zeros({channels});
    p.fuse_bn = BatchNormState(channels);
    return p;
}

Tensor position_attention(const Tensor& a, const IcrParams& p) {
    const std::int64_t h = a.dim(2), w = a.dim(3);
    Tensor q = flatten_hw(conv2d(a, p.wq, nullptr, 1, 0));  // [B x HW x C']
    Tensor k = flatten_hw(conv2d(a, p.wk, nullptr, 1, 0));
    Tensor v = flatten_hw(conv2d(a, p.wv, nullptr, 1, 0));  // [B x HW x C]

    Tensor energy = bmm(q, permute(k, {0, 2, 1}));  // [B x HW x HW]
    Tensor attn = softmax(energy, 2);               // rows sum to 1 over keys
    Tensor out = unflatten_hw(bmm(attn, v), h, w);
    return add(mul(p.gamma, out), a);
}

Tensor region_embedding(const Tensor& a, const Tensor& m) {
    if (a.rank() != 4 || m.rank() != 4 || m.dim(1) != 1 || a.dim(0) != m.dim(0) ||
        a.dim(2) != m.dim(2) || a.dim(3) != m.dim(3)) {
        throw DimensionError("region_embedding: incompatible shapes " + shape_str(a.shape()) +
                             " and " + shape_str(m.shape()));
    }
    for (double v : m.values()) {
        if (v < 0.0) throw ContractError("region_embedding: coarse map has negative entries");
    }
    Tensor fm = flatten_hw(m);                          // [B x HW x 1]
    Tensor total = sum_axis(fm, 1, /*keepdim=*/true);   // [B x 1 x 1]
    Tensor weights = div(fm, add_scalar(total, 1e-6));  // sums to ~1 per item
    Tensor fa = flatten_hw(a);                          // [B x HW x C]
    Tensor e = bmm(permute(weights, {0, 2, 1}), fa);    // [B x 1 x C]
    return reshape(e, {a.dim(0), a.dim(1)});
}

Tensor cross_attention(const Tensor& bank, const Tensor& feats) {
    if (bank.rank() != 2 || feats.rank() != 4) {
        throw DimensionError("cross_attention: expected bank [SxC], feats [BxCxHxW]");
    }
    if (bank.dim(0) < 1) {
        throw ContractError("cross_attention: empty bank (callers must guarantee S >= 1)");
    }
    if (bank.dim(1) != feats.dim(1)) {
        throw DimensionError("cross_attention: bank row length " + std::to_string(bank.dim(1)) +
                             " does not match " + std::to_string(feats.dim(1)) + " channels");
    }
    const std::int64_t b = feats.dim(0), hw = feats.dim(2) * feats.dim(3);
    Tensor flat = reshape(flatten_hw(feats), {b * hw, feats.dim(1)});
    Tensor scores = reshape(matmul(flat, transpose2d(bank)), {b, hw, bank.dim(0)});
    return permute(softmax(scores, 2), {1, 0, 2});  // [HW x B x S]
}

Tensor augment(const Tensor& x, const Tensor& bank, std::int64_t height, std::int64_t width) {
    if (x.rank() != 3 || bank.rank() != 2 || x.dim(2) != bank.dim(0)) {
        throw DimensionError("augment: attention map " + shape_str(x.shape()) +
                             " does not match bank " + shape_str(bank.shape()));
    }
    if (x.dim(0) != height * width) {
        throw DimensionError("augment: map has " + std::to_string(x.dim(0)) +
                             " pixels, expected " + std::to_string(height * width));
    }
    const std::int64_t b = x.dim(1), s = x.dim(2);
    Tensor flat = reshape(permute(x, {1, 0, 2}), {b * height * width, s});
    Tensor mixed = reshape(matmul(flat, bank), {b, height * width, bank.dim(1)});
    return unflatten_hw(mixed, height, width);
}

EcrOutputs ecr_forward(const Tensor& a, EcrParams& p, RegionMemory* mem, bool training) {
    EcrOutputs out;
    Tensor pre = batch_norm(conv2d(a, p.psi_w, nullptr, 1, 0), p.psi_gamma, p.psi_beta, p.psi_bn,
                            training);
    out.m = relu(pre);
    out.e = region_embedding(a, out.m);

    Tensor bank;
    if (training && mem && !mem->empty()) {
        bank = mem->snapshot();
    } else {
        bank = out.e;  // within-batch fallback / eval-mode removal
    }
    out.y = augment(cross_attention(bank, a), bank, a.dim(2), a.dim(3));

    if (training && mem) mem->push_batch(out.e);
    return out;
}

Tensor fuse(const Tensor& y_icr, const Tensor& y_ecr, EcrParams& p, bool training) {
    if (y_icr.shape() != y_ecr.shape()) {
        throw DimensionError("fuse: shapes " + shape_str(y_icr.shape()) + " and " +
                             shape_str(y_ecr.shape()) + " differ");
    }
    Tensor cat = concat(y_icr, y_ecr, 1);
    return relu(batch_norm(conv2d(cat, p.fuse_w, nullptr, 1, 1), p.fuse_gamma, p.fuse_beta,
                           p.fuse_bn, training));
}

}  // namespace dcr
