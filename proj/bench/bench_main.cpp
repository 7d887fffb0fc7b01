#include "mcmcnet/kernels.hpp"
#include "mcmcnet/mcmc.hpp"
#include "mcmcnet/prior.hpp"
#include "mcmcnet/problem.hpp"
#include "mcmcnet/surrogate.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace mcmcnet;
namespace k = mcmcnet::kernels;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

template <bool Parallel>
void BM_DenseForward(benchmark::State& state) {
    const std::size_t in = static_cast<std::size_t>(state.range(0)), out = kGridSize;
    const auto w = randn(in * out, 1), b = randn(out, 2), x = randn(in, 3);
    std::vector<double> y(out);
    for (auto _ : state) {
        if constexpr (Parallel) k::parallel::dense_forward(w, b, x, y);
        else k::serial::dense_forward(w, b, x, y);
        benchmark::DoNotOptimize(y.data());
    }
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const k::ConvShape s{c, c, kGridSide, kGridSide};
    const auto w = randn(s.weight_size(), 1), b = randn(c, 2), in = randn(s.in_size(), 3);
    std::vector<double> out(s.out_size());
    for (auto _ : state) {
        if constexpr (Parallel) k::parallel::conv3x3_forward(s, w, b, in, out);
        else k::serial::conv3x3_forward(s, w, b, in, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const k::ConvShape s{c, c, kGridSide, kGridSide};
    const auto w = randn(s.weight_size(), 1), in = randn(s.in_size(), 3), dout = randn(s.out_size(), 4);
    std::vector<double> dw(w.size()), db(c), din(s.in_size());
    for (auto _ : state) {
        if constexpr (Parallel) k::parallel::conv3x3_backward(s, w, in, dout, dw, db, din);
        else k::serial::conv3x3_backward(s, w, in, dout, dw, db, din);
        benchmark::DoNotOptimize(din.data());
    }
}

template <bool Parallel>
void BM_MaternCovariance(benchmark::State& state) {
    const TriMesh mesh = build_disk_mesh(static_cast<int>(state.range(0)));
    const MaternParams p{3.0, 0.4};
    for (auto _ : state) {
        Eigen::MatrixXd c = Parallel ? k::parallel::matern_covariance(mesh.nodes, p)
                                     : k::serial::matern_covariance(mesh.nodes, p);
        benchmark::DoNotOptimize(c.data());
    }
}

struct EitFixture {
    InverseProblem problem;
    Eigen::VectorXd latent;

    explicit EitFixture(int refinement) : problem([&] {
        ProblemConfig pc;
        pc.refinement = refinement;
        return pc;
    }()) {
        Rng rng(5);
        latent = sample_gp(problem.prior(), rng);
    }
};

void BM_FemEvaluate(benchmark::State& state) {
    const EitFixture f(static_cast<int>(state.range(0)));
    const FemBackend fem(f.problem);
    for (auto _ : state) benchmark::DoNotOptimize(fem.evaluate({f.latent.data(), std::size_t(f.latent.size())}));
    state.counters["triangles"] = static_cast<double>(f.problem.mesh().tri_count());
}

void BM_NetEvaluate(benchmark::State& state) {
    const EitFixture f(static_cast<int>(state.range(0)));
    NetArchitecture arch;
    arch.input_dim = f.problem.input_dim();
    const SurrogateBackend net(f.problem, SurrogateNet::he_init(arch, 1));
    for (auto _ : state) benchmark::DoNotOptimize(net.evaluate({f.latent.data(), std::size_t(f.latent.size())}));
    state.counters["triangles"] = static_cast<double>(f.problem.mesh().tri_count());
}

} // namespace

BENCHMARK(BM_DenseForward<false>)->Arg(289)->Arg(1089);
BENCHMARK(BM_DenseForward<true>)->Arg(289)->Arg(1089);
BENCHMARK(BM_ConvForward<false>)->Arg(4)->Arg(16);
BENCHMARK(BM_ConvForward<true>)->Arg(4)->Arg(16);
BENCHMARK(BM_ConvBackward<false>)->Arg(4)->Arg(16);
BENCHMARK(BM_ConvBackward<true>)->Arg(4)->Arg(16);
BENCHMARK(BM_MaternCovariance<false>)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaternCovariance<true>)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FemEvaluate)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NetEvaluate)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
