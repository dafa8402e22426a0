#pragma once

#include <string>

#include "dcr/memory.hpp"
#include "dcr/ops.hpp"
#include "dcr/rng.hpp"

namespace dcr {

// Uniform init scaled by 1/sqrt(fan_in); fan_in = cin * kh * kw.
Tensor init_conv_weight(std::int64_t cout, std::int64_t cin, std::int64_t kh, std::int64_t kw,
                        Rng& rng);

// Interior contextual-relation block: position attention over all pixel
// pairs of one image, gated by a learned scalar that starts at zero.
struct IcrParams {
    Tensor wq, wk;  // [C' x C x 1 x 1], C' = max(C/8, 1)
    Tensor wv;      // [C x C x 1 x 1]
    Tensor gamma;   // [1], init 0

    static IcrParams init(std::int64_t channels, Rng& rng);

    template <class F>
    void visit_params(const std::string& prefix, F&& f) {
        f(prefix + ".wq", wq);
        f(prefix + ".wk", wk);
        f(prefix + ".wv", wv);
        f(prefix + ".gamma", gamma);
    }
};

// Exterior contextual-relation block: coarse-map head (psi) producing the
// region embedding, plus the 3x3 fusion conv combining ICR and ECR outputs.
struct EcrParams {
    Tensor psi_w;  // [1 x C x 1 x 1]
    Tensor psi_gamma, psi_beta;
    BatchNormState psi_bn;

    Tensor fuse_w;  // [C x 2C x 3 x 3]
    Tensor fuse_gamma, fuse_beta;
    BatchNormState fuse_bn;

    static EcrParams init(std::int64_t channels, Rng& rng);

    template <class F>
    void visit_params(const std::string& prefix, F&& f) {
        f(prefix + ".psi.w", psi_w);
        f(prefix + ".psi.gamma", psi_gamma);
        f(prefix + ".psi.beta", psi_beta);
        f(prefix + ".fuse.w", fuse_w);
        f(prefix + ".fuse.gamma", fuse_gamma);
        f(prefix + ".fuse.beta", fuse_beta);
    }

    template <class F>
    void visit_buffers(const std::string& prefix, F&& f) {
        f(prefix + ".psi.bn.running_mean", psi_bn.running_mean);
        f(prefix + ".psi.bn.running_var", psi_bn.running_var);
        f(prefix + ".fuse.bn.running_mean", fuse_bn.running_mean);
        f(prefix + ".fuse.bn.running_var", fuse_bn.running_var);
    }
};

// [B x C x H x W] -> [B x C x H x W]; gamma * attention(a) + a.
Tensor position_attention(const Tensor& a, const IcrParams& p);

// Mask-weighted mean of pixel features: [B x C x H x W], [B x 1 x H x W]
// -> [B x C]. The mask is sum-normalized with epsilon 1e-6, so an all-zero
// mask yields the zero embedding.
Tensor region_embedding(const Tensor& a, const Tensor& m);

// Softmax over bank entries of per-pixel dot products:
// bank [S x C], feats [B x C x H x W] -> attention map [HW x B x S].
Tensor cross_attention(const Tensor& bank, const Tensor& feats);

// Per-pixel convex combination of bank rows:
// x [HW x B x S], bank [S x C] -> [B x C x H x W].
Tensor augment(const Tensor& x, const Tensor& bank, std::int64_t height, std::int64_t width);

struct EcrOutputs {
    Tensor y;  // augmented features [B x C x H x W]
    Tensor m;  // coarse map [B x 1 x H x W]
    Tensor e;  // region embeddings [B x C]
};

// Full ECR pipeline. In training mode the bank is a pre-push snapshot of
// the memory (falling back to the batch's own embeddings while the memory
// is empty) and the batch embeddings are pushed afterwards, gradient-
// severed. Passing mem == nullptr disables the memory entirely: the bank
// is always the current batch (the memory-less ablation variant). In eval
// mode the memory is never consulted or touched.
EcrOutputs ecr_forward(const Tensor& a, EcrParams& p, RegionMemory* mem, bool training);

// Channel-concatenates both inputs and mixes them with 3x3 conv -> BN ->
// ReLU back to C channels.
Tensor fuse(const Tensor& y_icr, const Tensor& y_ecr, EcrParams& p, bool training);

}  // namespace dcr
