#include <benchmark/benchmark.h>

#include <vector>

#include "dcr/attention.hpp"
#include "dcr/losses.hpp"
#include "dcr/network.hpp"
#include "dcr/rng.hpp"

using namespace dcr;

namespace {

Tensor rand_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

}  // namespace

static void BM_Conv3x3(benchmark::State& state) {
    const std::int64_t c = state.range(0);
    const Tensor x = rand_tensor({4, c, 32, 32}, 1);
    const Tensor w = rand_tensor({c, c, 3, 3}, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d(x, w, nullptr, 1, 1));
    }
    state.SetItemsProcessed(state.iterations() * 4 * c * c * 32 * 32 * 9);
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Arg(64);

static void BM_PositionAttention(benchmark::State& state) {
    Rng rng(3);
    const std::int64_t c = state.range(0);
    IcrParams icr = IcrParams::init(c, rng);
    icr.gamma = Tensor({1}, {0.5});
    const Tensor a = rand_tensor({4, c, 8, 8}, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(position_attention(a, icr));
    }
}
BENCHMARK(BM_PositionAttention)->Arg(32)->Arg(128);

static void BM_EcrPipeline(benchmark::State& state) {
    Rng rng(5);
    const std::int64_t c = 128;
    EcrParams ecr = EcrParams::init(c, rng);
    RegionMemory mem(20);
    const Tensor a = rand_tensor({4, c, 4, 4}, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ecr_forward(a, ecr, &mem, true));
    }
}
BENCHMARK(BM_EcrPipeline);

static void BM_NetworkForwardEval(benchmark::State& state) {
    NetworkConfig nc;
    nc.seed = 7;
    Network net(nc);
    RegionMemory mem(nc.memory_capacity);
    const Tensor batch = rand_tensor({1, 3, 64, 64}, 8, 0.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward(batch, mem, false));
    }
    state.SetItemsProcessed(state.iterations());  // samples/sec
}
BENCHMARK(BM_NetworkForwardEval)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
    NetworkConfig nc;
    nc.seed = 9;
    Network net(nc);
    RegionMemory mem(nc.memory_capacity);
    const Tensor batch = rand_tensor({4, 3, 64, 64}, 10, 0.0, 1.0);
    Rng rng(11);
    std::vector<double> gv(4 * 64 * 64);
    for (double& g : gv) g = rng.coin() ? 1.0 : 0.0;
    const Tensor gt({4, 1, 64, 64}, std::move(gv));
    for (auto _ : state) {
        Tape tape;
        net.attach(tape);
        const LossReport loss = total_loss(net.forward(batch, mem, true), gt);
        tape.backward(loss.total_tensor);
        benchmark::DoNotOptimize(loss.total);
    }
    state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
