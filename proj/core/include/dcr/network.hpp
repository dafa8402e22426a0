#pragma once

#include <array>
#include <string>

#include "dcr/attention.hpp"
#include "dcr/memory.hpp"
#include "dcr/ops.hpp"

namespace dcr {

struct NetworkConfig {
    std::int64_t height = 64;
    std::int64_t width = 64;  // both divisible by 16
    std::array<std::int64_t, 4> stage_channels{16, 32, 64, 128};
    std::int64_t memory_capacity = 20;
    std::uint64_t seed = 0;
    bool use_icr = true;
    bool use_ecr = true;
    bool use_rom = true;
};

struct ForwardOutputs {
    Tensor final_map;                 // [B x 1 x H x W] logits
    std::array<Tensor, 3> side_maps;  // decoder-head logits, upsampled
    Tensor coarse_m;                  // psi output upsampled; undefined when ECR is off
    Tensor bottleneck;
};

// 3x3 conv -> BN -> ReLU
struct ConvBnRelu {
    Tensor w;
    Tensor gamma, beta;
    BatchNormState bn;
    std::int64_t stride = 1;

    static ConvBnRelu init(std::int64_t cin, std::int64_t cout, std::int64_t stride, Rng& rng);
    Tensor forward(const Tensor& x, bool training);

    template <class F>
    void visit_params(const std::string& prefix, F&& f) {
        f(prefix + ".w", w);
        f(prefix + ".gamma", gamma);
        f(prefix + ".beta", beta);
    }
    template <class F>
    void visit_buffers(const std::string& prefix, F&& f) {
        f(prefix + ".running_mean", bn.running_mean);
        f(prefix + ".running_var", bn.running_var);
    }
};

// 1x1 conv with bias, single output channel.
struct PredictionHead {
    Tensor w;
    Tensor b;

    static PredictionHead init(std::int64_t cin, Rng& rng);
    Tensor forward(const Tensor& x) const;

    template <class F>
    void visit_params(const std::string& prefix, F&& f) {
        f(prefix + ".w", w);
        f(prefix + ".b", b);
    }
};

// Toy U-shaped encoder-decoder: four stride-2 encoder stages, ICR/ECR on
// the bottleneck, three decoder up-stages with skip concatenation, deep
// supervision heads on every decoder stage plus a final head.
class Network {
public:
    explicit Network(const NetworkConfig& config);

    ForwardOutputs forward(const Tensor& batch, RegionMemory& mem, bool training);

    const NetworkConfig& config() const { return config_; }
    std::int64_t parameter_count();
    void attach(Tape& tape);  // watch every parameter as a leaf

    template <class F>
    void visit_params(F&& f) {
        for (std::size_t i = 0; i < 4; ++i) {
            const std::string p = "enc" + std::to_string(i + 1);
            enc_a_[i].visit_params(p + ".a", f);
            enc_b_[i].visit_params(p + ".b", f);
            enc_down_[i].visit_params(p + ".down", f);
        }
        if (config_.use_icr) icr_.visit_params("icr", f);
        if (config_.use_ecr) ecr_.visit_params("ecr", f);
        for (std::size_t i = 0; i < 3; ++i) {
            dec_[i].visit_params("dec" + std::to_string(i + 1), f);
            side_heads_[i].visit_params("head.side" + std::to_string(i + 1), f);
        }
        final_head_.visit_params("head.final", f);
    }

    template <class F>
    void visit_buffers(F&& f) {
        for (std::size_t i = 0; i < 4; ++i) {
            const std::string p = "enc" + std::to_string(i + 1);
            enc_a_[i].visit_buffers(p + ".a", f);
            enc_b_[i].visit_buffers(p + ".b", f);
            enc_down_[i].visit_buffers(p + ".down", f);
        }
        if (config_.use_ecr) ecr_.visit_buffers("ecr", f);
        for (std::size_t i = 0; i < 3; ++i) {
            dec_[i].visit_buffers("dec" + std::to_string(i + 1), f);
        }
    }

    EcrParams& ecr_params() { return ecr_; }
    IcrParams& icr_params() { return icr_; }

private:
    NetworkConfig config_;
    std::array<ConvBnRelu, 4> enc_a_, enc_b_, enc_down_;
    IcrParams icr_;
    EcrParams ecr_;
    std::array<ConvBnRelu, 3> dec_;
    std::array<PredictionHead, 3> side_heads_;
    PredictionHead final_head_;
};

}  // namespace dcr
