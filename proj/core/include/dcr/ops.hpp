#pragma once

#include "dcr/tensor.hpp"

namespace dcr {

// Per-channel running statistics for batch normalization.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;
    std::int64_t step_count = 0;

    explicit BatchNormState(std::int64_t channels = 0)
        : running_mean(static_cast<std::size_t>(channels), 0.0),
          running_var(static_cast<std::size_t>(channels), 1.0) {}
};

// Elementwise binary ops with numpy-style broadcasting (dimensions must be
// equal or 1 after the shorter shape is left-padded with 1s).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
Tensor neg(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);  // log(1 + e^x), overflow-safe

Tensor sum_all(const Tensor& x);                               // -> [1]
Tensor sum_axis(const Tensor& x, std::size_t axis, bool keepdim = true);
Tensor mean_all(const Tensor& x);                              // -> [1]

Tensor softmax(const Tensor& x, std::size_t axis);

Tensor matmul(const Tensor& a, const Tensor& b);  // [m x k] . [k x n]
Tensor bmm(const Tensor& a, const Tensor& b);     // [B x m x k] . [B x k x n]

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
Tensor transpose2d(const Tensor& x);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);

// Flatten of a feature map: [B x C x H x W] -> [B x HW x C] (pixel-major
// rows, matching the orientation used by the region-embedding product).
Tensor flatten_hw(const Tensor& x);
// Inverse of flatten_hw.
Tensor unflatten_hw(const Tensor& x, std::int64_t height, std::int64_t width);

// Cross-correlation convolution, kernels 1x1 or 3x3, zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::int64_t stride,
              std::int64_t pad);

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  bool training);

// Integer-factor bilinear upsampling, half-pixel centers, edge clamping.
Tensor upsample_bilinear(const Tensor& x, std::int64_t factor);

// Average pooling with an odd kernel; divisor counts in-bounds cells only.
Tensor avg_pool(const Tensor& x, std::int64_t k, std::int64_t stride, std::int64_t pad);

}  // namespace dcr
