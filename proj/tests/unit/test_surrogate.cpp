#include "mcmcnet/error.hpp"
#include "mcmcnet/surrogate.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

using namespace mcmcnet;

namespace {

std::vector<double> randn(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

TrainingSet random_set(int n, int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TrainingSet ts;
    for (int i = 0; i < n; ++i) {
        ts.inputs.push_back(randn(dim, rng));
        ts.targets.push_back(randn(kGridSize, rng));
    }
    return ts;
}

std::string serialize(const SurrogateNet& net) {
    std::stringstream s;
    save_model(net, s);
    return s.str();
}

} // namespace

TEST_SUITE("surrogate") {

TEST_CASE("all-zero network outputs zeros") {
    const SurrogateNet net(NetArchitecture{10, 4, 3, false});
    const std::vector<double> x(10, 1.5);
    const auto y = net.forward(x);
    CHECK(y.size() == static_cast<std::size_t>(kGridSize));
    for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("identity kernels pass a nonnegative dense bias through") {
    SurrogateNet net(NetArchitecture{5, 3, 3, false});
    auto& p = net.parameters();
    for (int i = 0; i < kGridSize; ++i) p[1].data[i] = 0.01 * i;
    // Route channel 0 through every layer with a centre tap.
    for (int l = 0; l < 3; ++l) {
        const auto s = net.conv_shape(l);
        p[2 + 2 * l].data[(0 * s.in_ch + 0) * 9 + 4] = 1.0;
    }
    const auto y = net.forward(std::vector<double>{1, -2, 3, 4, 5});
    for (int i = 0; i < kGridSize; ++i) CHECK(y[i] == 0.01 * i);
}

TEST_CASE("random network output is finite and deterministic") {
    const SurrogateNet net = SurrogateNet::he_init(NetArchitecture{30, 8, 4, false}, 3);
    std::mt19937_64 rng(1);
    const auto x = randn(30, rng);
    const auto a = net.forward(x);
    const auto b = net.forward(x);
    CHECK(a == b);
    for (double v : a) CHECK(std::isfinite(v));
}

TEST_CASE("zero adjoint gives zero gradients and gradients are linear in it") {
    const SurrogateNet net = SurrogateNet::he_init(NetArchitecture{12, 4, 2, false}, 5);
    std::mt19937_64 rng(2);
    const auto x = randn(12, rng);
    ForwardCache cache;
    net.forward(x, cache);
    for (const auto& t : net.backward(cache, std::vector<double>(kGridSize, 0.0))) {
        for (double v : t.data) CHECK(v == 0.0);
    }
    auto g = randn(kGridSize, rng);
    const ParameterSet one = net.backward(cache, g);
    for (double& v : g) v *= 2.0;
    const ParameterSet two = net.backward(cache, g);
    for (std::size_t p = 0; p < one.size(); ++p) {
        for (std::size_t i = 0; i < one[p].size(); ++i) CHECK(two[p].data[i] == doctest::Approx(2.0 * one[p].data[i]));
    }
}

TEST_CASE("gradients match central differences") {
    const NetArchitecture arch{20, 4, 2, false};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SurrogateNet net = SurrogateNet::he_init(arch, seed);
        std::mt19937_64 rng(seed + 40);
        std::normal_distribution<double> n(0.0, 0.5);
        for (auto& t : net.parameters()) {
            for (double& v : t.data) v = n(rng);
        }
        const auto x = randn(20, rng), g = randn(kGridSize, rng);
        ForwardCache cache;
        net.forward(x, cache);
        const ParameterSet grads = net.backward(cache, g);
        const double h = 1e-6;
        for (std::size_t p = 0; p < grads.size(); ++p) {
            auto& param = net.parameters()[p].data;
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < param.size(); ++i) {
                const double keep = param[i];
                auto loss = [&] {
                    const auto y = net.forward(x);
                    double s = 0.0;
                    for (int j = 0; j < kGridSize; ++j) s += y[j] * g[j];
                    return s;
                };
                param[i] = keep + h;
                const double up = loss();
                param[i] = keep - h;
                const double down = loss();
                param[i] = keep;
                const double fd = (up - down) / (2.0 * h);
                num += (fd - grads[p].data[i]) * (fd - grads[p].data[i]);
                den = std::max(den, fd * fd + grads[p].data[i] * grads[p].data[i]);
            }
            INFO("group " << p);
            CHECK(std::sqrt(num / std::max(den, 1e-300)) < 1e-4);
        }
    }
}

TEST_CASE("He initialization has the right spread") {
    const SurrogateNet net = SurrogateNet::he_init(NetArchitecture{40, 16, 3, false}, 9);
    const auto& w = net.parameters()[0].data;
    REQUIRE(w.size() >= 10000);
    double ss = 0.0;
    for (double v : w) ss += v * v;
    const double sd = std::sqrt(ss / w.size());
    CHECK(std::abs(sd / std::sqrt(2.0 / 40.0) - 1.0) <= 0.2);
    for (double v : net.parameters()[1].data) CHECK(v == 0.0);
}

TEST_CASE("first Adam step on a scalar") {
    ParameterSet params{Tensor({1})};
    ParameterSet grads{Tensor({1})};
    grads[0].data[0] = 1.0;
    AdamState st = make_adam_state(params);
    adam_step(params, grads, st, 0.1);
    CHECK(params[0].data[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(st.step == 1);
}

TEST_CASE("Adam with zero gradients leaves parameters alone") {
    const SurrogateNet net = SurrogateNet::he_init(NetArchitecture{6, 2, 2, false}, 1);
    ParameterSet params = net.parameters();
    AdamState st = make_adam_state(params);
    adam_step(params, net.zero_like(), st, 0.1);
    CHECK(params == net.parameters());
}

TEST_CASE("training history is finite, improves and is reproducible") {
    const TrainingSet ts = random_set(40, 10, 3);
    TrainConfig tc;
    tc.epochs = 12;
    tc.minibatch = 8;
    tc.lr = 1e-3;
    tc.seed = 4;
    SurrogateNet a = SurrogateNet::he_init(NetArchitecture{10, 4, 2, false}, 2);
    SurrogateNet b = a;
    const TrainResult ra = train(a, ts, tc);
    const TrainResult rb = train(b, ts, tc);
    REQUIRE(ra.history.size() == 12);
    double best = ra.history.front().loss;
    for (std::size_t i = 0; i < ra.history.size(); ++i) {
        CHECK(std::isfinite(ra.history[i].loss));
        CHECK(ra.history[i].loss == rb.history[i].loss);
        CHECK(ra.history[i].lr == tc.lr);
        best = std::min(best, ra.history[i].loss);
    }
    CHECK(best <= ra.history.front().loss);
    CHECK(a.parameters() == b.parameters());
}

TEST_CASE("learning rate drops on schedule") {
    const TrainingSet ts = random_set(8, 4, 5);
    TrainConfig tc;
    tc.epochs = 7;
    tc.minibatch = 4;
    tc.lr = 1e-2;
    tc.lr_drop_factor = 0.5;
    tc.lr_drop_period = 3;
    SurrogateNet net = SurrogateNet::he_init(NetArchitecture{4, 2, 2, false}, 1);
    const TrainResult r = train(net, ts, tc);
    CHECK(r.history[0].lr == 1e-2);
    CHECK(r.history[2].lr == 1e-2);
    CHECK(r.history[3].lr == 5e-3);
    CHECK(r.history[6].lr == 2.5e-3);
}

TEST_CASE("a single pair is memorized") {
    const TrainingSet one = random_set(1, 20, 8);
    SurrogateNet net = SurrogateNet::he_init(NetArchitecture{20, 16, 4, false}, 7);
    TrainConfig tc;
    tc.epochs = 200;
    tc.minibatch = 1;
    tc.lr = 3e-3;
    train(net, one, tc);
    CHECK(dataset_mse(net, one) < 1e-6);
}

TEST_CASE("training config validation") {
    TrainConfig tc;
    tc.minibatch = 0;
    CHECK_THROWS_AS(validate(tc), InvalidArgument);
    tc = TrainConfig{};
    tc.lr = -1.0;
    CHECK_THROWS_AS(validate(tc), InvalidArgument);
}

TEST_CASE("normalization is fitted, applied and undone") {
    const TrainingSet ts = random_set(30, 6, 11);
    const Normalization n = fit_normalization(ts);
    CHECK(n.input_mean.size() == 6);
    CHECK(n.output_mean.size() == static_cast<std::size_t>(kGridSize));
    CHECK(n.input_scale > 0.0);

    // A zero network returns the output mean whatever the input.
    SurrogateNet net(NetArchitecture{6, 2, 2, false});
    net.set_normalization(n);
    CHECK(net.forward(ts.inputs[0]) == n.output_mean);

    Normalization bad = n;
    bad.input_mean.pop_back();
    CHECK_THROWS_AS(net.set_normalization(bad), InvalidArgument);
    bad = n;
    bad.output_scale = 0.0;
    CHECK_THROWS_AS(net.set_normalization(bad), InvalidArgument);
}

TEST_CASE("model round trip is bitwise") {
    SurrogateNet net = SurrogateNet::he_init(NetArchitecture{9, 3, 3, true}, 6);
    net.set_normalization(fit_normalization(random_set(5, 9, 1)));
    std::stringstream s(serialize(net));
    const SurrogateNet r = load_model(s);
    CHECK(r.architecture() == net.architecture());
    CHECK(r.parameters() == net.parameters());
    CHECK(r.normalization() == net.normalization());
    CHECK(serialize(r) == serialize(net));
}

TEST_CASE("truncated or foreign model files are rejected") {
    const std::string bytes = serialize(SurrogateNet::he_init(NetArchitecture{9, 3, 2, false}, 6));
    for (std::size_t cut : {std::size_t{0}, std::size_t{4}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
        std::stringstream s(bytes.substr(0, cut));
        CHECK_THROWS_AS(load_model(s), FormatError);
    }
    std::string other_version = bytes;
    other_version[8] = static_cast<char>(99);
    std::stringstream v(other_version);
    CHECK_THROWS_AS(load_model(v), FormatError);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream m(bad_magic);
    CHECK_THROWS_AS(load_model(m), FormatError);
}

}
