#include <doctest.h>

#include <cmath>
#include <vector>

#include "dcr/gradcheck.hpp"
#include "dcr/ops.hpp"
#include "dcr/rng.hpp"

using namespace dcr;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    // pre-quantized to float32 so identity laws hold bitwise after ops
    for (double& x : v) x = static_cast<double>(static_cast<float>(rng.uniform(lo, hi)));
    return Tensor(std::move(shape), std::move(v));
}

// Naive quintuple-loop cross-correlation, padding with zeros.
std::vector<double> conv_oracle(const Tensor& x, const Tensor& w, const Tensor* bias,
                                std::int64_t stride, std::int64_t pad) {
    const std::int64_t b = x.dim(0), cin = x.dim(1), h = x.dim(2), ww = x.dim(3);
    const std::int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const std::int64_t oh = (h + 2 * pad - kh) / stride + 1;
    const std::int64_t ow = (ww + 2 * pad - kw) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(b * cout * oh * ow), 0.0);
    for (std::int64_t n = 0; n < b; ++n)
        for (std::int64_t co = 0; co < cout; ++co)
            for (std::int64_t oy = 0; oy < oh; ++oy)
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    double acc = bias ? bias->at(co) : 0.0;
                    for (std::int64_t ci = 0; ci < cin; ++ci)
                        for (std::int64_t ky = 0; ky < kh; ++ky)
                            for (std::int64_t kx = 0; kx < kw; ++kx) {
                                const std::int64_t iy = oy * stride - pad + ky;
                                const std::int64_t ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= ww) continue;
                                acc += x.at(((n * cin + ci) * h + iy) * ww + ix) *
                                       w.at(((co * cin + ci) * kh + ky) * kw + kx);
                            }
                    out[((n * cout + co) * oh + oy) * ow + ox] = acc;
                }
    return out;
}

}  // namespace

TEST_CASE("matmul hand oracle and identities") {
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor b({2, 2}, {5, 6, 7, 8});
    const Tensor c = matmul(a, b);
    CHECK(c.at(0) == 19);
    CHECK(c.at(1) == 22);
    CHECK(c.at(2) == 43);
    CHECK(c.at(3) == 50);

    Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor ix = matmul(eye, b);
    for (int i = 0; i < 4; ++i) CHECK(ix.at(i) == b.at(i));

    const Tensor z = matmul(a, Tensor::zeros({2, 3}));
    for (int i = 0; i < 6; ++i) CHECK(z.at(i) == 0.0);

    CHECK_THROWS_AS(matmul(a, Tensor::zeros({3, 2})), DimensionError);
}

TEST_CASE("softmax oracles, shift invariance, and large-magnitude stability") {
    const Tensor s1 = softmax(Tensor({2}, {0, 0}), 0);
    CHECK(s1.at(0) == doctest::Approx(0.5));
    const Tensor s2 = softmax(Tensor({3}, {4.2, 4.2, 4.2}), 0);
    CHECK(s2.at(1) == doctest::Approx(1.0 / 3.0));
    const Tensor s3 = softmax(Tensor({2}, {0.0, std::log(3.0)}), 0);
    CHECK(s3.at(0) == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(s3.at(1) == doctest::Approx(0.75).epsilon(1e-6));

    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Tensor x = rand_tensor({3, 5}, rng, -1e4, 1e4);
        const Tensor y = softmax(x, 1);
        for (int r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (int c = 0; c < 5; ++c) {
                sum += y.at(r * 5 + c);
                CHECK(y.at(r * 5 + c) >= 0.0);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
        }
    }
}

TEST_CASE("conv2d agrees with the quintuple-loop oracle") {
    Rng rng(23);
    for (int rep = 0; rep < 8; ++rep) {
        const std::int64_t b = rng.uniform_int(1, 2), cin = rng.uniform_int(1, 4);
        const std::int64_t cout = rng.uniform_int(1, 3);
        const std::int64_t h = rng.uniform_int(3, 8), w = rng.uniform_int(3, 8);
        const bool k3 = rng.coin();
        const std::int64_t k = k3 ? 3 : 1;
        const std::int64_t stride = rng.uniform_int(1, 2);
        const std::int64_t pad = k3 ? rng.uniform_int(0, 1) : 0;
        const Tensor x = rand_tensor({b, cin, h, w}, rng);
        const Tensor wt = rand_tensor({cout, cin, k, k}, rng);
        const Tensor bias = rand_tensor({cout}, rng);
        const Tensor got = conv2d(x, wt, &bias, stride, pad);
        const auto want = conv_oracle(x, wt, &bias, stride, pad);
        REQUIRE(got.values().size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got.at(static_cast<std::int64_t>(i)) == doctest::Approx(want[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("conv2d trivial cases") {
    // 1x1 identity kernel
    Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor wid({1, 1, 1, 1}, {1.0});
    const Tensor y = conv2d(x, wid, nullptr, 1, 0);
    for (int i = 0; i < 4; ++i) CHECK(y.at(i) == x.at(i));

    // all-ones 3x3, pad 1, constant input: interior 9c, corner 4c
    Tensor c3 = Tensor::full({1, 1, 3, 3}, 2.0);
    Tensor ones({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    const Tensor s = conv2d(c3, ones, nullptr, 1, 1);
    CHECK(s.at(4) == doctest::Approx(18.0));
    CHECK(s.at(0) == doctest::Approx(8.0));

    // zero weights + bias beta -> constant beta
    Tensor wz = Tensor::zeros({2, 1, 3, 3});
    Tensor beta({2}, {0.7, -0.2});
    const Tensor bonly = conv2d(c3, wz, &beta, 1, 1);
    CHECK(bonly.at(0) == doctest::Approx(0.7));
    CHECK(bonly.at(9) == doctest::Approx(-0.2));

    CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 1, 5, 5}), nullptr, 1, 2), ParameterError);
    CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 1, 1}), nullptr, 1, 0), DimensionError);
}

TEST_CASE("batch_norm normalizes and handles degenerate channels") {
    Rng rng(31);
    const Tensor x = rand_tensor({2, 3, 4, 4}, rng);
    Tensor gamma = Tensor::full({3}, 1.0), beta = Tensor::zeros({3});
    BatchNormState bn(3);
    const Tensor y = batch_norm(x, gamma, beta, bn, true);
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0, sq = 0.0;
        std::int64_t n = 0;
        for (int b = 0; b < 2; ++b)
            for (int i = 0; i < 16; ++i) {
                const double v = y.at((b * 3 + c) * 16 + i);
                sum += v;
                sq += v * v;
                ++n;
            }
        const double mean = sum / n;
        CHECK(std::fabs(mean) <= 1e-5);
        CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(1e-3));
    }
    for (double v : bn.running_var) CHECK(v >= 0.0);

    // constant channel collapses to beta
    Tensor xc = Tensor::full({1, 1, 2, 2}, 5.0);
    BatchNormState bn1(1);
    Tensor b1({1}, {0.9});
    const Tensor yc = batch_norm(xc, Tensor::full({1}, 1.0), b1, bn1, true);
    for (int i = 0; i < 4; ++i) CHECK(yc.at(i) == doctest::Approx(0.9).epsilon(1e-4));

    // two-element channel [0,2] -> [-1,1] as eps -> 0
    Tensor x2({2, 1, 1, 1}, {0.0, 2.0});
    BatchNormState bn2(1);
    const Tensor y2 = batch_norm(x2, Tensor::full({1}, 1.0), Tensor::zeros({1}), bn2, true);
    CHECK(y2.at(0) == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(y2.at(1) == doctest::Approx(1.0).epsilon(1e-4));

    // training mode needs more than one sample per channel
    BatchNormState bn3(1);
    Tensor single({1, 1, 1, 1}, {1.0});
    CHECK_THROWS_AS(batch_norm(single, Tensor::full({1}, 1.0), Tensor::zeros({1}), bn3, true),
                    ContractError);
}

TEST_CASE("relu basics and idempotence") {
    Tensor x({3}, {-1, 0, 2});
    const Tensor y = relu(x);
    CHECK(y.at(0) == 0);
    CHECK(y.at(1) == 0);
    CHECK(y.at(2) == 2);
    const Tensor yy = relu(y);
    for (int i = 0; i < 3; ++i) CHECK(yy.at(i) == y.at(i));
    const Tensor z = relu(Tensor({2}, {-3, -0.5}));
    CHECK(z.at(0) == 0);
    CHECK(z.at(1) == 0);
}

TEST_CASE("upsample_bilinear: identity, constants, and scalar oracle") {
    Rng rng(41);
    const Tensor x = rand_tensor({1, 2, 3, 3}, rng);
    const Tensor same = upsample_bilinear(x, 1);
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(same.at(i) == x.at(i));

    const Tensor c = upsample_bilinear(Tensor::full({1, 1, 2, 2}, 3.5), 3);
    for (std::int64_t i = 0; i < c.size(); ++i) CHECK(c.at(i) == doctest::Approx(3.5));

    // half-pixel centers with clamping: corner output equals corner input
    Tensor g({1, 1, 2, 2}, {1, 2, 3, 4});
    const Tensor up = upsample_bilinear(g, 2);
    CHECK(up.at(0) == doctest::Approx(1.0));
    // independent scalar oracle for the full 4x4 grid
    for (std::int64_t oy = 0; oy < 4; ++oy) {
        for (std::int64_t ox = 0; ox < 4; ++ox) {
            auto src = [&](double o) { return std::clamp((o + 0.5) / 2.0 - 0.5, 0.0, 1.0); };
            const double sy = src(static_cast<double>(oy)), sx = src(static_cast<double>(ox));
            const std::int64_t y0 = static_cast<std::int64_t>(sy), x0 = static_cast<std::int64_t>(sx);
            const std::int64_t y1 = std::min<std::int64_t>(y0 + 1, 1), x1 = std::min<std::int64_t>(x0 + 1, 1);
            const double fy = sy - y0, fx = sx - x0;
            const double want = g.at(y0 * 2 + x0) * (1 - fy) * (1 - fx) +
                                g.at(y0 * 2 + x1) * (1 - fy) * fx +
                                g.at(y1 * 2 + x0) * fy * (1 - fx) + g.at(y1 * 2 + x1) * fy * fx;
            CHECK(up.at(oy * 4 + ox) == doctest::Approx(want).epsilon(1e-6));
        }
    }
}

TEST_CASE("avg_pool divides by the in-bounds count") {
    const Tensor c = avg_pool(Tensor::full({1, 1, 4, 4}, 2.0), 3, 1, 1);
    for (std::int64_t i = 0; i < c.size(); ++i) CHECK(c.at(i) == doctest::Approx(2.0));

    Tensor x({1, 1, 2, 2}, {0, 4, 4, 8});
    const Tensor idp = avg_pool(x, 1, 1, 0);
    for (int i = 0; i < 4; ++i) CHECK(idp.at(i) == x.at(i));

    const Tensor p = avg_pool(x, 3, 1, 1);
    CHECK(p.at(0) == doctest::Approx(4.0));  // mean of the 4 in-bounds cells

    CHECK_THROWS_AS(avg_pool(x, 2, 1, 0), ParameterError);  // even kernel
}

TEST_CASE("flatten_hw/unflatten_hw round trip and index orientation") {
    Rng rng(53);
    const Tensor x = rand_tensor({2, 3, 2, 4}, rng);
    const Tensor flat = flatten_hw(x);
    REQUIRE(flat.shape() == Shape{2, 8, 3});
    // index-arithmetic oracle: flat[b, y*W+x, c] == x[b, c, y, x]
    for (std::int64_t b = 0; b < 2; ++b)
        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t y = 0; y < 2; ++y)
                for (std::int64_t xx = 0; xx < 4; ++xx) {
                    CHECK(flat.at((b * 8 + y * 4 + xx) * 3 + c) ==
                          x.at(((b * 3 + c) * 2 + y) * 4 + xx));
                }
    const Tensor back = unflatten_hw(flat, 2, 4);
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(back.at(i) == x.at(i));
}

TEST_CASE("permute round trip with an involutive order") {
    Rng rng(59);
    const Tensor x = rand_tensor({2, 3, 4}, rng);
    const Tensor twice = permute(permute(x, {1, 0, 2}), {1, 0, 2});
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(twice.at(i) == x.at(i));
}

TEST_CASE("broadcasting rules") {
    Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor row({3}, {10, 20, 30});
    const Tensor s = add(a, row);
    CHECK(s.at(0) == 11);
    CHECK(s.at(5) == 36);
    Tensor col({2, 1}, {100, 200});
    const Tensor t = add(a, col);
    CHECK(t.at(2) == 103);
    CHECK(t.at(3) == 204);
    CHECK_THROWS_AS(add(a, Tensor::zeros({2})), DimensionError);
}

TEST_CASE("ten random small shapes per primitive stay within gradcheck tolerance") {
    Rng rng(61);
    for (int rep = 0; rep < 10; ++rep) {
        Shape s;
        const int rank = static_cast<int>(rng.uniform_int(1, 3));
        for (int d = 0; d < rank; ++d) s.push_back(rng.uniform_int(1, 4));
        Tensor x = rand_tensor(s, rng, 0.3, 1.4);
        const Tensor other = rand_tensor(s, rng, 0.3, 1.4);
        auto run = [&](const char* name, std::function<Tensor(const Tensor&)> g) {
            const double err =
                grad_check([&](const Tensor& t) { return sum_all(mul(g(t), other)); }, x, 1e-3);
            INFO(name << " rep " << rep);
            CHECK(err <= 1e-3);
        };
        run("mul", [&](const Tensor& t) { return mul(t, other); });
        run("div", [&](const Tensor& t) { return div(other, t); });
        run("exp", [&](const Tensor& t) { return exp(t); });
        run("log", [&](const Tensor& t) { return log(t); });
        run("sigmoid", [&](const Tensor& t) { return sigmoid(t); });
        run("softplus", [&](const Tensor& t) { return softplus(t); });
        run("relu", [&](const Tensor& t) { return relu(t); });
        run("softmax", [&](const Tensor& t) { return softmax(t, s.size() - 1); });
    }
}
