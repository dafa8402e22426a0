#include <algorithm>
#include <cmath>
#include <cstring>

#include "dcr/ops.hpp"
#include "op_common.hpp"

namespace dcr {

namespace {

// C[m x n] += A[m x k] . B[k x n], plain buffers. i-k-j order so the inner
// loop streams both B and C rows.
void gemm_acc(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k,
              std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m x n] += A^T[.] . B  where A is [k x m]
void gemm_at_b_acc(const double* a, const double* b, double* c, std::int64_t k, std::int64_t m,
                   std::int64_t n) {
    for (std::int64_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::int64_t i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c + i * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m x k] += A[m x n] . B^T where B is [k x n]
void gemm_a_bt_acc(const double* a, const double* b, double* c, std::int64_t m, std::int64_t n,
                   std::int64_t k) {
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::int64_t j = 0; j < k; ++j) {
            const double* brow = b + j * n;
            double acc = 0.0;
            for (std::int64_t p = 0; p < n; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

void im2col(const double* img, std::int64_t cin, std::int64_t h, std::int64_t w, std::int64_t kh,
            std::int64_t kw, std::int64_t stride, std::int64_t pad, std::int64_t oh,
            std::int64_t ow, double* col) {
    // col is [cin*kh*kw x oh*ow]
    for (std::int64_t c = 0; c < cin; ++c) {
        for (std::int64_t ky = 0; ky < kh; ++ky) {
            for (std::int64_t kx = 0; kx < kw; ++kx) {
                double* dst = col + ((c * kh + ky) * kw + kx) * oh * ow;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst + oy * ow, dst + (oy + 1) * ow, 0.0);
                        continue;
                    }
                    const double* src = img + (c * h + iy) * w;
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kx;
                        dst[oy * ow + ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_acc(const double* col, std::int64_t cin, std::int64_t h, std::int64_t w,
                std::int64_t kh, std::int64_t kw, std::int64_t stride, std::int64_t pad,
                std::int64_t oh, std::int64_t ow, double* img) {
    for (std::int64_t c = 0; c < cin; ++c) {
        for (std::int64_t ky = 0; ky < kh; ++ky) {
            for (std::int64_t kx = 0; kx < kw; ++kx) {
                const double* src = col + ((c * kh + ky) * kw + kx) * oh * ow;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    double* dst = img + (c * h + iy) * w;
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) dst[ix] += src[oy * ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
    gemm_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
    return detail::finish(
        Shape{m, n}, std::move(out), {&a, &b},
        [a, b, m, k, n](const std::vector<double>& gout, const Tape::GradSink& sink) {
            // dA = G . B^T, dB = A^T . G
            gemm_a_bt_acc(gout.data(), b.values().data(), sink(0).data(), m, n, k);
            gemm_at_b_acc(a.values().data(), gout.data(), sink(1).data(), m, k, n);
        });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
        throw DimensionError("bmm: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::int64_t bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    std::vector<double> out(static_cast<std::size_t>(bs * m * n), 0.0);
    for (std::int64_t i = 0; i < bs; ++i) {
        gemm_acc(a.values().data() + i * m * k, b.values().data() + i * k * n,
                 out.data() + i * m * n, m, k, n);
    }
    return detail::finish(
        Shape{bs, m, n}, std::move(out), {&a, &b},
        [a, b, bs, m, k, n](const std::vector<double>& gout, const Tape::GradSink& sink) {
            auto& da = sink(0);
            auto& db = sink(1);
            for (std::int64_t i = 0; i < bs; ++i) {
                gemm_a_bt_acc(gout.data() + i * m * n, b.values().data() + i * k * n,
                              da.data() + i * m * k, m, n, k);
                gemm_at_b_acc(a.values().data() + i * m * k, gout.data() + i * m * n,
                              db.data() + i * k * n, m, k, n);
            }
        });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::int64_t stride,
              std::int64_t pad) {
    if (x.rank() != 4 || w.rank() != 4) {
        throw DimensionError("conv2d: expected x [BxCxHxW] and w [OxIxKhxKw], got " +
                             shape_str(x.shape()) + " and " + shape_str(w.shape()));
    }
    const std::int64_t b = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != cin) {
        throw DimensionError("conv2d: weight expects " + std::to_string(w.dim(1)) +
                             " input channels, input has " + std::to_string(cin));
    }
    if ((kh != 1 && kh != 3) || (kw != 1 && kw != 3)) {
        throw ParameterError("conv2d: kernel sizes must be 1 or 3, got " +
                             std::to_string(kh) + "x" + std::to_string(kw));
    }
    if (h + 2 * pad < kh || wd + 2 * pad < kw) {
        throw DimensionError("conv2d: kernel larger than padded input " + shape_str(x.shape()));
    }
    if (bias && (bias->rank() != 1 || bias->dim(0) != cout)) {
        throw DimensionError("conv2d: bias shape " + shape_str(bias->shape()) +
                             " does not match " + std::to_string(cout) + " output channels");
    }
    const std::int64_t oh = (h + 2 * pad - kh) / stride + 1;
    const std::int64_t ow = (wd + 2 * pad - kw) / stride + 1;
    const std::int64_t patch = cin * kh * kw;

    std::vector<double> col(static_cast<std::size_t>(patch * oh * ow));
    std::vector<double> out(static_cast<std::size_t>(b * cout * oh * ow), 0.0);
    for (std::int64_t i = 0; i < b; ++i) {
        im2col(x.values().data() + i * cin * h * wd, cin, h, wd, kh, kw, stride, pad, oh, ow,
               col.data());
        gemm_acc(w.values().data(), col.data(), out.data() + i * cout * oh * ow, cout, patch,
                 oh * ow);
    }
    if (bias) {
        const auto& bv = bias->values();
        for (std::int64_t i = 0; i < b; ++i) {
            for (std::int64_t c = 0; c < cout; ++c) {
                double* dst = out.data() + (i * cout + c) * oh * ow;
                for (std::int64_t j = 0; j < oh * ow; ++j) dst[j] += bv[c];
            }
        }
    }

    Tensor x_saved = x;  // cheap handle copies for the closure
    Tensor w_saved = w;
    Tensor bias_saved = bias ? *bias : Tensor();
    return detail::finish(
        Shape{b, cout, oh, ow}, std::move(out), {&x, &w, bias},
        [=](const std::vector<double>& gout, const Tape::GradSink& sink) {
            auto& dx = sink(0);
            auto& dw = sink(1);
            std::vector<double> col(static_cast<std::size_t>(patch * oh * ow));
            std::vector<double> dcol(static_cast<std::size_t>(patch * oh * ow));
            for (std::int64_t i = 0; i < b; ++i) {
                const double* g = gout.data() + i * cout * oh * ow;
                im2col(x_saved.values().data() + i * cin * h * wd, cin, h, wd, kh, kw, stride, pad,
                       oh, ow, col.data());
                // dW += G . col^T
                gemm_a_bt_acc(g, col.data(), dw.data(), cout, oh * ow, patch);
                // dcol = W^T . G
                std::fill(dcol.begin(), dcol.end(), 0.0);
                gemm_at_b_acc(w_saved.values().data(), g, dcol.data(), cout, patch, oh * ow);
                col2im_acc(dcol.data(), cin, h, wd, kh, kw, stride, pad, oh, ow,
                           dx.data() + i * cin * h * wd);
            }
            if (bias_saved.defined()) {
                auto& db = sink(2);
                for (std::int64_t i = 0; i < b; ++i) {
                    for (std::int64_t c = 0; c < cout; ++c) {
                        const double* g = gout.data() + (i * cout + c) * oh * ow;
                        for (std::int64_t j = 0; j < oh * ow; ++j) db[c] += g[j];
                    }
                }
            }
        });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  bool training) {
    if (x.rank() != 4) {
        throw DimensionError("batch_norm: expected [BxCxHxW], got " + shape_str(x.shape()));
    }
    const std::int64_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (gamma.size() != c || beta.size() != c ||
        static_cast<std::int64_t>(state.running_mean.size()) != c) {
        throw DimensionError("batch_norm: per-channel parameter size mismatch for " +
                             std::to_string(c) + " channels");
    }
    const std::int64_t n = b * h * w;
    if (training && n < 2) {
        throw ContractError("batch_norm: degenerate batch (B*H*W = " + std::to_string(n) +
                            " < 2) in training mode");
    }

    const auto& xv = x.values();
    const auto& gv = gamma.values();
    const auto& bv = beta.values();
    const double eps = state.eps;

    std::vector<double> mean(c), inv_std(c);
    if (training) {
        std::vector<double> var(c, 0.0);
        for (std::int64_t ch = 0; ch < c; ++ch) {
            double m = 0.0;
            for (std::int64_t i = 0; i < b; ++i) {
                const double* p = xv.data() + (i * c + ch) * h * w;
                for (std::int64_t j = 0; j < h * w; ++j) m += p[j];
            }
            m /= static_cast<double>(n);
            double v = 0.0;
            for (std::int64_t i = 0; i < b; ++i) {
                const double* p = xv.data() + (i * c + ch) * h * w;
                for (std::int64_t j = 0; j < h * w; ++j) v += (p[j] - m) * (p[j] - m);
            }
            v /= static_cast<double>(n);
            mean[ch] = m;
            var[ch] = v;
            inv_std[ch] = 1.0 / std::sqrt(v + eps);
            const double unbiased = n > 1 ? v * static_cast<double>(n) / static_cast<double>(n - 1)
                                          : v;
            state.running_mean[ch] =
                (1.0 - state.momentum) * state.running_mean[ch] + state.momentum * m;
            state.running_var[ch] =
                (1.0 - state.momentum) * state.running_var[ch] + state.momentum * unbiased;
        }
        ++state.step_count;
    } else {
        for (std::int64_t ch = 0; ch < c; ++ch) {
            mean[ch] = state.running_mean[ch];
            inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + eps);
        }
    }

    std::vector<double> out(xv.size());
    for (std::int64_t i = 0; i < b; ++i) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const double* p = xv.data() + (i * c + ch) * h * w;
            double* q = out.data() + (i * c + ch) * h * w;
            for (std::int64_t j = 0; j < h * w; ++j) {
                q[j] = gv[ch] * (p[j] - mean[ch]) * inv_std[ch] + bv[ch];
            }
        }
    }

    Tensor x_saved = x;
    Tensor gamma_saved = gamma;
    return detail::finish(
        x.shape(), std::move(out), {&x, &gamma, &beta},
        [=, mean = std::move(mean), inv_std = std::move(inv_std)](
            const std::vector<double>& gout, const Tape::GradSink& sink) {
            auto& dx = sink(0);
            auto& dg = sink(1);
            auto& db = sink(2);
            const auto& xv = x_saved.values();
            const auto& gv = gamma_saved.values();
            for (std::int64_t ch = 0; ch < c; ++ch) {
                double sum_g = 0.0, sum_gx = 0.0;
                for (std::int64_t i = 0; i < b; ++i) {
                    const double* g = gout.data() + (i * c + ch) * h * w;
                    const double* p = xv.data() + (i * c + ch) * h * w;
                    for (std::int64_t j = 0; j < h * w; ++j) {
                        sum_g += g[j];
                        sum_gx += g[j] * (p[j] - mean[ch]) * inv_std[ch];
                    }
                }
                dg[ch] += sum_gx;
                db[ch] += sum_g;
                if (training) {
                    const double inv_n = 1.0 / static_cast<double>(n);
                    for (std::int64_t i = 0; i < b; ++i) {
                        const double* g = gout.data() + (i * c + ch) * h * w;
                        const double* p = xv.data() + (i * c + ch) * h * w;
                        double* d = dx.data() + (i * c + ch) * h * w;
                        for (std::int64_t j = 0; j < h * w; ++j) {
                            const double xhat = (p[j] - mean[ch]) * inv_std[ch];
                            d[j] += gv[ch] * inv_std[ch] *
                                    (g[j] - inv_n * sum_g - xhat * inv_n * sum_gx);
                        }
                    }
                } else {
                    for (std::int64_t i = 0; i < b; ++i) {
                        const double* g = gout.data() + (i * c + ch) * h * w;
                        double* d = dx.data() + (i * c + ch) * h * w;
                        for (std::int64_t j = 0; j < h * w; ++j) {
                            d[j] += gv[ch] * inv_std[ch] * g[j];
                        }
                    }
                }
            }
        });
}

Tensor upsample_bilinear(const Tensor& x, std::int64_t factor) {
    if (factor < 1) {
        throw ParameterError("upsample_bilinear: factor must be >= 1, got " +
                             std::to_string(factor));
    }
    if (x.rank() != 4) {
        throw DimensionError("upsample_bilinear: expected [BxCxHxW], got " + shape_str(x.shape()));
    }
    const std::int64_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::int64_t oh = h * factor, ow = w * factor;

    // per-axis sample positions (half-pixel centers, clamped)
    struct Sample {
        std::int64_t lo, hi;
        double frac;
    };
    auto make_axis = [factor](std::int64_t in, std::int64_t out) {
        std::vector<Sample> s(static_cast<std::size_t>(out));
        for (std::int64_t o = 0; o < out; ++o) {
            double pos = (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
            pos = std::clamp(pos, 0.0, static_cast<double>(in - 1));
            const auto lo = static_cast<std::int64_t>(std::floor(pos));
            s[o] = {lo, std::min(lo + 1, in - 1), pos - static_cast<double>(lo)};
        }
        return s;
    };
    auto ys = make_axis(h, oh);
    auto xs = make_axis(w, ow);

    const auto& xv = x.values();
    std::vector<double> out(static_cast<std::size_t>(b * c * oh * ow));
    for (std::int64_t i = 0; i < b * c; ++i) {
        const double* src = xv.data() + i * h * w;
        double* dst = out.data() + i * oh * ow;
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            const auto& sy = ys[oy];
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                const auto& sx = xs[ox];
                const double top =
                    src[sy.lo * w + sx.lo] * (1 - sx.frac) + src[sy.lo * w + sx.hi] * sx.frac;
                const double bot =
                    src[sy.hi * w + sx.lo] * (1 - sx.frac) + src[sy.hi * w + sx.hi] * sx.frac;
                dst[oy * ow + ox] = top * (1 - sy.frac) + bot * sy.frac;
            }
        }
    }
    return detail::finish(
        Shape{b, c, oh, ow}, std::move(out), {&x},
        [=, ys = std::move(ys), xs = std::move(xs)](const std::vector<double>& gout,
                                                    const Tape::GradSink& sink) {
            auto& dx = sink(0);
            for (std::int64_t i = 0; i < b * c; ++i) {
                const double* g = gout.data() + i * oh * ow;
                double* d = dx.data() + i * h * w;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const auto& sy = ys[oy];
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const auto& sx = xs[ox];
                        const double gv = g[oy * ow + ox];
                        d[sy.lo * w + sx.lo] += gv * (1 - sy.frac) * (1 - sx.frac);
                        d[sy.lo * w + sx.hi] += gv * (1 - sy.frac) * sx.frac;
                        d[sy.hi * w + sx.lo] += gv * sy.frac * (1 - sx.frac);
                        d[sy.hi * w + sx.hi] += gv * sy.frac * sx.frac;
                    }
                }
            }
        });
}

Tensor avg_pool(const Tensor& x, std::int64_t k, std::int64_t stride, std::int64_t pad) {
    if (k < 1 || k % 2 == 0) {
        throw ParameterError("avg_pool: kernel must be odd and positive, got " + std::to_string(k));
    }
    if (x.rank() != 4) {
        throw DimensionError("avg_pool: expected [BxCxHxW], got " + shape_str(x.shape()));
    }
    const std::int64_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::int64_t oh = (h + 2 * pad - k) / stride + 1;
    const std::int64_t ow = (w + 2 * pad - k) / stride + 1;

    const auto& xv = x.values();
    std::vector<double> out(static_cast<std::size_t>(b * c * oh * ow));
    for (std::int64_t i = 0; i < b * c; ++i) {
        const double* src = xv.data() + i * h * w;
        double* dst = out.data() + i * oh * ow;
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            const std::int64_t y0 = std::max<std::int64_t>(0, oy * stride - pad);
            const std::int64_t y1 = std::min(h, oy * stride - pad + k);
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                const std::int64_t x0 = std::max<std::int64_t>(0, ox * stride - pad);
                const std::int64_t x1 = std::min(w, ox * stride - pad + k);
                double acc = 0.0;
                for (std::int64_t y = y0; y < y1; ++y) {
                    for (std::int64_t xx = x0; xx < x1; ++xx) acc += src[y * w + xx];
                }
                dst[oy * ow + ox] = acc / static_cast<double>((y1 - y0) * (x1 - x0));
            }
        }
    }
    return detail::finish(
        Shape{b, c, oh, ow}, std::move(out), {&x},
        [=](const std::vector<double>& gout, const Tape::GradSink& sink) {
            auto& dx = sink(0);
            for (std::int64_t i = 0; i < b * c; ++i) {
                const double* g = gout.data() + i * oh * ow;
                double* d = dx.data() + i * h * w;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t y0 = std::max<std::int64_t>(0, oy * stride - pad);
                    const std::int64_t y1 = std::min(h, oy * stride - pad + k);
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t x0 = std::max<std::int64_t>(0, ox * stride - pad);
                        const std::int64_t x1 = std::min(w, ox * stride - pad + k);
                        const double gv =
                            g[oy * ow + ox] / static_cast<double>((y1 - y0) * (x1 - x0));
                        for (std::int64_t y = y0; y < y1; ++y) {
                            for (std::int64_t xx = x0; xx < x1; ++xx) d[y * w + xx] += gv;
                        }
                    }
                }
            }
        });
}

}  // namespace dcr
