#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "dcr/ops.hpp"
#include "op_common.hpp"

namespace dcr {

namespace {

struct BroadcastPlan {
    Shape out;
    std::vector<std::int64_t> stride_a;  // 0 on broadcast dims
    std::vector<std::int64_t> stride_b;
};

std::vector<std::int64_t> row_major_strides(const Shape& shape) {
    std::vector<std::int64_t> strides(shape.size(), 1);
    for (std::int64_t i = static_cast<std::int64_t>(shape.size()) - 2; i >= 0; --i) {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    return strides;
}

BroadcastPlan broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
    std::size_t rank = std::max(a.size(), b.size());
    Shape pa(rank, 1), pb(rank, 1);
    std::copy(a.begin(), a.end(), pa.begin() + (rank - a.size()));
    std::copy(b.begin(), b.end(), pb.begin() + (rank - b.size()));

    BroadcastPlan plan;
    plan.out.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        if (pa[i] == pb[i] || pa[i] == 1 || pb[i] == 1) {
            plan.out[i] = std::max(pa[i], pb[i]);
        } else {
            throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                                 shape_str(b) + " are not broadcastable");
        }
    }
    auto sa = row_major_strides(pa);
    auto sb = row_major_strides(pb);
    plan.stride_a.resize(rank);
    plan.stride_b.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        plan.stride_a[i] = pa[i] == 1 ? 0 : sa[i];
        plan.stride_b[i] = pb[i] == 1 ? 0 : sb[i];
    }
    return plan;
}

// Generic broadcast binary op. FwdFn: (av, bv) -> out; GradA/GradB:
// (av, bv, g) -> contribution to that operand's gradient.
template <class FwdFn, class GradA, class GradB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, FwdFn fwd, GradA ga,
                 GradB gb) {
    if (a.shape() == b.shape()) {
        // fast path: no index arithmetic
        const auto& av = a.values();
        const auto& bv = b.values();
        std::vector<double> out(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
        return detail::finish(
            a.shape(), std::move(out), {&a, &b},
            [a, b, ga, gb](const std::vector<double>& gout, const Tape::GradSink& sink) {
                auto& da = sink(0);
                auto& db = sink(1);
                const auto& av = a.values();
                const auto& bv = b.values();
                for (std::size_t i = 0; i < gout.size(); ++i) {
                    da[i] += ga(av[i], bv[i], gout[i]);
                    db[i] += gb(av[i], bv[i], gout[i]);
                }
            });
    }

    BroadcastPlan plan = broadcast_shapes(a.shape(), b.shape(), name);
    const std::int64_t n = numel(plan.out);
    auto out_strides = row_major_strides(plan.out);
    const std::size_t rank = plan.out.size();

    // captured by value: the backward closure outlives this frame
    auto map_indices = [plan, out_strides, rank](std::int64_t flat, std::int64_t& ia,
                                                 std::int64_t& ib) {
        ia = 0;
        ib = 0;
        for (std::size_t d = 0; d < rank; ++d) {
            std::int64_t idx = (flat / out_strides[d]) % plan.out[d];
            ia += idx * plan.stride_a[d];
            ib += idx * plan.stride_b[d];
        }
    };

    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t ia, ib;
        map_indices(i, ia, ib);
        out[i] = fwd(av[ia], bv[ib]);
    }
    return detail::finish(
        plan.out, std::move(out), {&a, &b},
        [a, b, ga, gb, map_indices, n](const std::vector<double>& gout,
                                       const Tape::GradSink& sink) {
            auto& da = sink(0);
            auto& db = sink(1);
            const auto& av = a.values();
            const auto& bv = b.values();
            for (std::int64_t i = 0; i < n; ++i) {
                std::int64_t ia, ib;
                map_indices(i, ia, ib);
                da[ia] += ga(av[ia], bv[ib], gout[i]);
                db[ib] += gb(av[ia], bv[ib], gout[i]);
            }
        });
}

// Elementwise unary op. GradFn: (x, y, g) -> dx contribution.
template <class FwdFn, class GradFn>
Tensor unary_op(const Tensor& x, FwdFn fwd, GradFn grad) {
    const auto& xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
    std::vector<double> saved = out;  // pre-quantization values are fine here
    return detail::finish(
        x.shape(), std::move(out), {&x},
        [x, grad, saved = std::move(saved)](const std::vector<double>& gout,
                                            const Tape::GradSink& sink) {
            auto& dx = sink(0);
            const auto& xv = x.values();
            for (std::size_t i = 0; i < gout.size(); ++i) dx[i] += grad(xv[i], saved[i], gout[i]);
        });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double, double y, double g) { return g * y; },
        [](double x, double, double g) { return g * x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "div", [](double x, double y) { return x / y; },
        [](double, double y, double g) { return g / y; },
        [](double x, double y, double g) { return -g * x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
    return unary_op(
        x, [factor](double v) { return v * factor; },
        [factor](double, double, double g) { return g * factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
    return unary_op(
        x, [offset](double v) { return v + offset; },
        [](double, double, double g) { return g; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor abs(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::fabs(v); },
        [](double v, double, double g) { return v > 0.0 ? g : (v < 0.0 ? -g : 0.0); });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::exp(v); },
        [](double, double y, double g) { return g * y; });
}

Tensor log(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::log(v); },
        [](double v, double, double g) { return g / v; });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double, double g) { return v > 0.0 ? g : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    auto sig = [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    };
    return unary_op(x, sig, [](double, double y, double g) { return g * y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
    auto sp = [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v))); };
    auto sig = [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    };
    return unary_op(x, sp, [sig](double v, double, double g) { return g * sig(v); });
}

Tensor sum_all(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    return detail::finish(Shape{1}, {acc}, {&x},
                          [](const std::vector<double>& gout, const Tape::GradSink& sink) {
                              auto& dx = sink(0);
                              for (auto& v : dx) v += gout[0];
                          });
}

Tensor mean_all(const Tensor& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x.size())); }

Tensor sum_axis(const Tensor& x, std::size_t axis, bool keepdim) {
    if (axis >= x.rank()) {
        throw DimensionError("sum_axis: axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(x.shape()));
    }
    const Shape& s = x.shape();
    std::int64_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::int64_t n = s[axis];

    const auto& xv = x.values();
    std::vector<double> out(static_cast<std::size_t>(outer * inner), 0.0);
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t j = 0; j < n; ++j) {
            const double* src = xv.data() + (o * n + j) * inner;
            double* dst = out.data() + o * inner;
            for (std::int64_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    }

    Shape out_shape = s;
    if (keepdim) {
        out_shape[axis] = 1;
    } else {
        out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
        if (out_shape.empty()) out_shape = {1};
    }
    return detail::finish(
        std::move(out_shape), std::move(out), {&x},
        [outer, inner, n](const std::vector<double>& gout, const Tape::GradSink& sink) {
            auto& dx = sink(0);
            for (std::int64_t o = 0; o < outer; ++o) {
                for (std::int64_t j = 0; j < n; ++j) {
                    double* dst = dx.data() + (o * n + j) * inner;
                    const double* src = gout.data() + o * inner;
                    for (std::int64_t i = 0; i < inner; ++i) dst[i] += src[i];
                }
            }
        });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(x.shape()));
    }
    const Shape& s = x.shape();
    std::int64_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::int64_t n = s[axis];

    const auto& xv = x.values();
    std::vector<double> out(xv.size());
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t i = 0; i < inner; ++i) {
            const std::int64_t base = o * n * inner + i;
            double mx = xv[base];
            for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
            double denom = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                double e = std::exp(xv[base + j * inner] - mx);
                out[base + j * inner] = e;
                denom += e;
            }
            for (std::int64_t j = 0; j < n; ++j) out[base + j * inner] /= denom;
        }
    }
    std::vector<double> saved = out;
    return detail::finish(
        x.shape(), std::move(out), {&x},
        [outer, inner, n, saved = std::move(saved)](const std::vector<double>& gout,
                                                    const Tape::GradSink& sink) {
            auto& dx = sink(0);
            for (std::int64_t o = 0; o < outer; ++o) {
                for (std::int64_t i = 0; i < inner; ++i) {
                    const std::int64_t base = o * n * inner + i;
                    double dot = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) {
                        dot += gout[base + j * inner] * saved[base + j * inner];
                    }
                    for (std::int64_t j = 0; j < n; ++j) {
                        const std::int64_t k = base + j * inner;
                        dx[k] += saved[k] * (gout[k] - dot);
                    }
                }
            }
        });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                             shape_str(shape));
    }
    std::vector<double> out = x.values();
    return detail::finish(std::move(shape), std::move(out), {&x},
                          [](const std::vector<double>& gout, const Tape::GradSink& sink) {
                              auto& dx = sink(0);
                              for (std::size_t i = 0; i < gout.size(); ++i) dx[i] += gout[i];
                          });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
    const std::size_t rank = x.rank();
    if (order.size() != rank) {
        throw DimensionError("permute: order length does not match rank");
    }
    std::vector<bool> seen(rank, false);
    for (std::size_t d : order) {
        if (d >= rank || seen[d]) throw DimensionError("permute: invalid axis permutation");
        seen[d] = true;
    }

    const Shape& s = x.shape();
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = s[order[i]];

    auto in_strides = row_major_strides(s);
    auto out_strides = row_major_strides(out_shape);
    const std::int64_t n = x.size();

    // src[t] = flat input index feeding output position t
    std::vector<std::int64_t> src(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) {
        std::int64_t in_idx = 0;
        for (std::size_t d = 0; d < rank; ++d) {
            std::int64_t idx = (t / out_strides[d]) % out_shape[d];
            in_idx += idx * in_strides[order[d]];
        }
        src[t] = in_idx;
    }

    const auto& xv = x.values();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) out[t] = xv[src[t]];

    return detail::finish(std::move(out_shape), std::move(out), {&x},
                          [src = std::move(src)](const std::vector<double>& gout,
                                                 const Tape::GradSink& sink) {
                              auto& dx = sink(0);
                              for (std::size_t t = 0; t < gout.size(); ++t) dx[src[t]] += gout[t];
                          });
}

Tensor transpose2d(const Tensor& x) {
    if (x.rank() != 2) {
        throw DimensionError("transpose2d: expected rank 2, got " + shape_str(x.shape()));
    }
    return permute(x, {1, 0});
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    if (a.rank() != b.rank() || axis >= a.rank()) {
        throw DimensionError("concat: rank mismatch or bad axis for " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    }
    for (std::size_t i = 0; i < a.rank(); ++i) {
        if (i != axis && a.dim(i) != b.dim(i)) {
            throw DimensionError("concat: shapes " + shape_str(a.shape()) + " and " +
                                 shape_str(b.shape()) + " differ off the concat axis");
        }
    }
    const Shape& s = a.shape();
    std::int64_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::int64_t na = a.dim(axis), nb = b.dim(axis);

    Shape out_shape = s;
    out_shape[axis] = na + nb;
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(static_cast<std::size_t>(numel(out_shape)));
    for (std::int64_t o = 0; o < outer; ++o) {
        double* dst = out.data() + o * (na + nb) * inner;
        std::memcpy(dst, av.data() + o * na * inner, sizeof(double) * na * inner);
        std::memcpy(dst + na * inner, bv.data() + o * nb * inner, sizeof(double) * nb * inner);
    }
    return detail::finish(
        std::move(out_shape), std::move(out), {&a, &b},
        [outer, inner, na, nb](const std::vector<double>& gout, const Tape::GradSink& sink) {
            auto& da = sink(0);
            auto& db = sink(1);
            for (std::int64_t o = 0; o < outer; ++o) {
                const double* src = gout.data() + o * (na + nb) * inner;
                for (std::int64_t i = 0; i < na * inner; ++i) da[o * na * inner + i] += src[i];
                for (std::int64_t i = 0; i < nb * inner; ++i) {
                    db[o * nb * inner + i] += src[na * inner + i];
                }
            }
        });
}

Tensor flatten_hw(const Tensor& x) {
    if (x.rank() != 4) {
        throw DimensionError("flatten_hw: expected [BxCxHxW], got " + shape_str(x.shape()));
    }
    const std::int64_t b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    return permute(reshape(x, {b, c, hw}), {0, 2, 1});
}

Tensor unflatten_hw(const Tensor& x, std::int64_t height, std::int64_t width) {
    if (x.rank() != 3 || x.dim(1) != height * width) {
        throw DimensionError("unflatten_hw: expected [BxHWxC] with HW=" +
                             std::to_string(height * width) + ", got " + shape_str(x.shape()));
    }
    return reshape(permute(x, {0, 2, 1}), {x.dim(0), x.dim(2), height, width});
}

}  // namespace dcr
