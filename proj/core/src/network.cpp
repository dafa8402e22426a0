#include "dcr/network.hpp"

namespace dcr {

ConvBnRelu ConvBnRelu::init(std::int64_t cin, std::int64_t cout, std::int64_t stride, Rng& rng) {
    ConvBnRelu layer;
    layer.w = init_conv_weight(cout, cin, 3, 3, rng);
    layer.gamma = Tensor::full({cout}, 1.0);
    layer.beta = Tensor::zeros({cout});
    layer.bn = BatchNormState(cout);
    layer.stride = stride;
    return layer;
}

Tensor ConvBnRelu::forward(const Tensor& x, bool training) {
    return relu(batch_norm(conv2d(x, w, nullptr, stride, 1), gamma, beta, bn, training));
}

PredictionHead PredictionHead::init(std::int64_t cin, Rng& rng) {
    PredictionHead head;
    head.w = init_conv_weight(1, cin, 1, 1, rng);
    head.b = Tensor::zeros({1});
    return head;
}

Tensor PredictionHead::forward(const Tensor& x) const { return conv2d(x, w, &b, 1, 0); }

Network::Network(const NetworkConfig& config) : config_(config) {
    if (config.height % 16 != 0 || config.width % 16 != 0 || config.height < 16 ||
        config.width < 16) {
        throw ConfigError("network: input size " + std::to_string(config.height) + "x" +
                          std::to_string(config.width) + " must be divisible by 16");
    }
    for (std::size_t i = 1; i < 4; ++i) {
        if (config.stage_channels[i] <= config.stage_channels[i - 1]) {
            throw ConfigError("network: stage_channels must be strictly increasing");
        }
    }

    Rng rng(Rng::mix(config.seed, 0xDC12));
    std::int64_t cin = 3;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::int64_t ch = config.stage_channels[i];
        enc_a_[i] = ConvBnRelu::init(cin, ch, 1, rng);
        enc_b_[i] = ConvBnRelu::init(ch, ch, 1, rng);
        enc_down_[i] = ConvBnRelu::init(ch, ch, 2, rng);
        cin = ch;
    }
    const std::int64_t bc = config.stage_channels[3];
    icr_ = IcrParams::init(bc, rng);
    ecr_ = EcrParams::init(bc, rng);

    // decoder stage i consumes (previous decoder channels + skip channels)
    const std::array<std::int64_t, 3> skip_ch{config.stage_channels[3], config.stage_channels[2],
                                              config.stage_channels[1]};
    std::int64_t dch = bc;
    for (std::size_t i = 0; i < 3; ++i) {
        dec_[i] = ConvBnRelu::init(dch + skip_ch[i], skip_ch[i], 1, rng);
        side_heads_[i] = PredictionHead::init(skip_ch[i], rng);
        dch = skip_ch[i];
    }
    final_head_ = PredictionHead::init(dch, rng);
}

ForwardOutputs Network::forward(const Tensor& batch, RegionMemory& mem, bool training) {
    if (batch.rank() != 4 || batch.dim(1) != 3 || batch.dim(2) != config_.height ||
        batch.dim(3) != config_.width) {
        throw DimensionError("forward: expected [Bx3x" + std::to_string(config_.height) + "x" +
                             std::to_string(config_.width) + "], got " + shape_str(batch.shape()));
    }

    std::array<Tensor, 4> skips;
    Tensor x = batch;
    for (std::size_t i = 0; i < 4; ++i) {
        x = enc_b_[i].forward(enc_a_[i].forward(x, training), training);
        skips[i] = x;
        x = enc_down_[i].forward(x, training);
    }

    ForwardOutputs out;
    out.bottleneck = x;

    Tensor dec_in = x;
    EcrOutputs ecr_out;
    if (config_.use_ecr) {
        RegionMemory* bank = config_.use_rom ? &mem : nullptr;
        ecr_out = ecr_forward(x, ecr_, bank, training);
        out.coarse_m = upsample_bilinear(ecr_out.m, 16);
    }
    if (config_.use_icr && config_.use_ecr) {
        dec_in = fuse(position_attention(x, icr_), ecr_out.y, ecr_, training);
    } else if (config_.use_icr) {
        dec_in = position_attention(x, icr_);
    } else if (config_.use_ecr) {
        dec_in = ecr_out.y;
    }

    Tensor d = dec_in;
    std::int64_t up_factor = 8;  // decoder stage 1 sits at H/8
    for (std::size_t i = 0; i < 3; ++i) {
        Tensor u = upsample_bilinear(d, 2);
        d = dec_[i].forward(concat(u, skips[3 - i], 1), training);
        out.side_maps[i] = upsample_bilinear(side_heads_[i].forward(d), up_factor);
        up_factor /= 2;
    }
    out.final_map = upsample_bilinear(final_head_.forward(d), 2);
    return out;
}

std::int64_t Network::parameter_count() {
    std::int64_t total = 0;
    visit_params([&](const std::string&, Tensor& t) { total += t.size(); });
    return total;
}

void Network::attach(Tape& tape) {
    visit_params([&](const std::string&, Tensor& t) { tape.watch(t); });
}

}  // namespace dcr
