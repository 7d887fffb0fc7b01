#include "mcmcnet/surrogate.hpp"

#include "mcmcnet/binary_io.hpp"
#include "mcmcnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

namespace mcmcnet {

namespace {

constexpr char kModelMagic[9] = "MCNETMDL";
constexpr std::uint32_t kModelVersion = 2;

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_architecture(const NetArchitecture& a) {
    if (a.input_dim < 1) throw InvalidArgument("input_dim must be positive");
    if (a.channels < 1) throw InvalidArgument("channel count must be positive");
    if (a.conv_layers < 1) throw InvalidArgument("at least one convolution layer is required");
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(product(shape), 0.0) {}

SurrogateNet::SurrogateNet(const NetArchitecture& arch) : arch_(arch) {
    check_architecture(arch);
    params_.emplace_back(std::vector<std::size_t>{static_cast<std::size_t>(arch.input_dim), kGridSize});
    params_.emplace_back(std::vector<std::size_t>{kGridSize});
    for (int l = 0; l < arch.conv_layers; ++l) {
        const auto s = conv_shape(l);
        params_.emplace_back(std::vector<std::size_t>{static_cast<std::size_t>(s.out_ch),
                                                      static_cast<std::size_t>(s.in_ch), 3, 3});
        params_.emplace_back(std::vector<std::size_t>{static_cast<std::size_t>(s.out_ch)});
    }
}

SurrogateNet SurrogateNet::he_init(const NetArchitecture& arch, std::uint64_t seed) {
    SurrogateNet net(arch);
    std::mt19937_64 rng(seed);
    for (std::size_t g = 0; g < net.params_.size(); g += 2) {
        Tensor& w = net.params_[g];
        const double fan_in = g == 0 ? static_cast<double>(arch.input_dim)
                                     : static_cast<double>(w.shape[1] * 9);
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
        for (double& x : w.data) x = normal(rng);
    }
    return net;
}

std::size_t SurrogateNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : params_) n += t.size();
    return n;
}

kernels::ConvShape SurrogateNet::conv_shape(int layer) const {
    kernels::ConvShape s;
    s.in_ch = layer == 0 ? 1 : arch_.channels;
    s.out_ch = layer == arch_.conv_layers - 1 ? 1 : arch_.channels;
    s.height = kGridSide;
    s.width = kGridSide;
    return s;
}

void SurrogateNet::set_normalization(Normalization n) {
    if (!n.input_mean.empty() && n.input_mean.size() != static_cast<std::size_t>(arch_.input_dim)) {
        throw InvalidArgument("input normalization does not match input_dim");
    }
    if (!n.output_mean.empty() && n.output_mean.size() != static_cast<std::size_t>(kGridSize)) {
        throw InvalidArgument("output normalization must be 16x16");
    }
    if (!(n.input_scale > 0.0 && std::isfinite(n.input_scale)) || !(n.output_scale > 0.0 && std::isfinite(n.output_scale))) {
        throw InvalidArgument("normalization scales must be positive and finite");
    }
    norm_ = std::move(n);
}

Normalization fit_normalization(const TrainingSet& data) {
    if (data.size() == 0) throw InvalidArgument("cannot fit normalization to an empty dataset");
    auto fit = [](const std::vector<std::vector<double>>& rows, std::vector<double>& mean, double& scale) {
        const std::size_t d = rows.front().size();
        mean.assign(d, 0.0);
        for (const auto& r : rows) {
            if (r.size() != d) throw InvalidArgument("training rows differ in length");
            for (std::size_t k = 0; k < d; ++k) mean[k] += r[k];
        }
        for (double& m : mean) m /= static_cast<double>(rows.size());
        double ss = 0.0;
        for (const auto& r : rows) {
            for (std::size_t k = 0; k < d; ++k) ss += (r[k] - mean[k]) * (r[k] - mean[k]);
        }
        const double rms = std::sqrt(ss / static_cast<double>(rows.size() * d));
        // A constant column set (a single sample, say) keeps unit scale.
        scale = rms > 1e-12 ? rms : 1.0;
    };
    Normalization n;
    fit(data.inputs, n.input_mean, n.input_scale);
    fit(data.targets, n.output_mean, n.output_scale);
    return n;
}

ParameterSet SurrogateNet::zero_like() const {
    ParameterSet out;
    out.reserve(params_.size());
    for (const auto& t : params_) out.emplace_back(t.shape);
    return out;
}

std::vector<double> SurrogateNet::forward(std::span<const double> input) const {
    ForwardCache cache;
    return forward(input, cache);
}

std::vector<double> SurrogateNet::forward(std::span<const double> input, ForwardCache& cache) const {
    if (params_.empty()) throw InvalidArgument("network has no parameters");
    if (input.size() != static_cast<std::size_t>(arch_.input_dim)) {
        throw InvalidArgument("input has " + std::to_string(input.size()) + " entries, network expects " +
                              std::to_string(arch_.input_dim));
    }
    for (double x : input) {
        if (!std::isfinite(x)) throw InvalidArgument("network input is not finite");
    }
    cache.input.assign(input.begin(), input.end());
    if (!norm_.input_mean.empty() || norm_.input_scale != 1.0) {
        const double inv = 1.0 / norm_.input_scale;
        for (std::size_t k = 0; k < cache.input.size(); ++k) {
            cache.input[k] = (cache.input[k] - (norm_.input_mean.empty() ? 0.0 : norm_.input_mean[k])) * inv;
        }
    }
    cache.activations.clear();
    cache.preactivations.clear();

    std::vector<double> pre(kGridSize);
    kernels::parallel::dense_forward(params_[0].data, params_[1].data, cache.input, pre);
    std::vector<double> act = pre;
    relu_inplace(act);
    cache.preactivations.push_back(std::move(pre));
    cache.activations.push_back(act);

    for (int l = 0; l < arch_.conv_layers; ++l) {
        const auto s = conv_shape(l);
        std::vector<double> out(s.out_size());
        kernels::parallel::conv3x3_forward(s, params_[2 + 2 * l].data, params_[3 + 2 * l].data,
                                           cache.activations.back(), out);
        std::vector<double> a = out;
        if (l + 1 < arch_.conv_layers || arch_.final_relu) relu_inplace(a);
        cache.preactivations.push_back(std::move(out));
        cache.activations.push_back(std::move(a));
    }
    std::vector<double> y = cache.activations.back();
    if (!norm_.output_mean.empty() || norm_.output_scale != 1.0) {
        for (std::size_t k = 0; k < y.size(); ++k) {
            y[k] = norm_.output_scale * y[k] + (norm_.output_mean.empty() ? 0.0 : norm_.output_mean[k]);
        }
    }
    return y;
}

ParameterSet SurrogateNet::backward(const ForwardCache& cache, std::span<const double> grad_out) const {
    ParameterSet grads = zero_like();
    backward(cache, grad_out, grads);
    return grads;
}

void SurrogateNet::backward(const ForwardCache& cache, std::span<const double> grad_out, ParameterSet& grads) const {
    if (cache.activations.size() != static_cast<std::size_t>(arch_.conv_layers) + 1 ||
        cache.input.size() != static_cast<std::size_t>(arch_.input_dim)) {
        throw InvalidArgument("backward pass needs the cache of a forward pass through this network");
    }
    if (grad_out.size() != static_cast<std::size_t>(kGridSize)) throw InvalidArgument("output gradient must be 16x16");
    if (grads.size() != params_.size()) throw InvalidArgument("gradient set does not match the network");

    std::vector<double> g(grad_out.begin(), grad_out.end());
    if (norm_.output_scale != 1.0) {
        for (double& v : g) v *= norm_.output_scale;
    }
    for (int l = arch_.conv_layers - 1; l >= 0; --l) {
        const auto s = conv_shape(l);
        const auto& pre = cache.preactivations[l + 1];
        if (l + 1 < arch_.conv_layers || arch_.final_relu) {
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (!(pre[k] > 0.0)) g[k] = 0.0;
            }
        }
        std::vector<double> din(s.in_size());
        kernels::parallel::conv3x3_backward(s, params_[2 + 2 * l].data, cache.activations[l], g,
                                            grads[2 + 2 * l].data, grads[3 + 2 * l].data, din);
        g = std::move(din);
    }
    const auto& pre0 = cache.preactivations[0];
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(pre0[k] > 0.0)) g[k] = 0.0;
    }
    kernels::parallel::dense_backward(params_[0].data, cache.input, g, grads[0].data, grads[1].data, {});
}

AdamState make_adam_state(const ParameterSet& params) {
    AdamState st;
    for (const auto& t : params) {
        st.m.emplace_back(t.shape);
        st.v.emplace_back(t.shape);
    }
    return st;
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, double lr) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw InvalidArgument("adam: parameter group count mismatch");
    }
    for (std::size_t g = 0; g < params.size(); ++g) {
        if (grads[g].shape != params[g].shape || state.m[g].shape != params[g].shape ||
            state.v[g].shape != params[g].shape) {
            throw InvalidArgument("adam: shape mismatch in group " + std::to_string(g));
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t g = 0; g < params.size(); ++g) {
        auto& p = params[g].data;
        const auto& d = grads[g].data;
        auto& m = state.m[g].data;
        auto& v = state.v[g].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * d[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * d[k] * d[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + state.eps);
        }
    }
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw InvalidArgument("epochs must be positive");
    if (cfg.minibatch < 1) throw InvalidArgument("minibatch must be positive");
    if (!(cfg.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (!(cfg.lr_drop_factor > 0.0 && cfg.lr_drop_factor <= 1.0)) {
        throw InvalidArgument("lr_drop_factor must be in (0, 1]");
    }
    if (cfg.lr_drop_period < 1) throw InvalidArgument("lr_drop_period must be positive");
}

double sample_mse(const std::vector<double>& output, const std::vector<double>& target) {
    if (output.size() != target.size()) throw InvalidArgument("output and target sizes differ");
    double s = 0.0;
    for (std::size_t k = 0; k < output.size(); ++k) {
        const double d = output[k] - target[k];
        s += d * d;
    }
    return s / static_cast<double>(output.size());
}

double dataset_mse(const SurrogateNet& net, const TrainingSet& data) {
    if (data.size() == 0) throw InvalidArgument("empty dataset");
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += sample_mse(net.forward(data.inputs[i]), data.targets[i]);
    return s / static_cast<double>(data.size());
}

TrainResult train(SurrogateNet& net, const TrainingSet& data, const TrainConfig& cfg,
                  const std::function<void(int, const SurrogateNet&)>& after_epoch) {
    validate(cfg);
    if (data.size() == 0) throw InvalidArgument("cannot train on an empty dataset");
    if (data.targets.size() != data.inputs.size()) throw InvalidArgument("inputs and targets differ in count");
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.inputs[i].size() != static_cast<std::size_t>(net.architecture().input_dim)) {
            throw InvalidArgument("sample " + std::to_string(i) + " does not match the network input_dim");
        }
        if (data.targets[i].size() != static_cast<std::size_t>(kGridSize)) {
            throw InvalidArgument("sample " + std::to_string(i) + " target is not 16x16");
        }
    }

    std::mt19937_64 rng(cfg.seed);
    AdamState adam = make_adam_state(net.parameters());
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    ParameterSet grads = net.zero_like();
    ForwardCache cache;
    std::vector<double> grad_out(kGridSize);

    TrainResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.lr * std::pow(cfg.lr_drop_factor, (epoch - 1) / cfg.lr_drop_period);
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
            const double scale = 2.0 / (static_cast<double>(kGridSize) * static_cast<double>(end - start));
            for (auto& t : grads) std::fill(t.data.begin(), t.data.end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t idx = order[b];
                const auto out = net.forward(data.inputs[idx], cache);
                const auto& target = data.targets[idx];
                double se = 0.0;
                for (int k = 0; k < kGridSize; ++k) {
                    const double d = out[k] - target[k];
                    se += d * d;
                    grad_out[k] = scale * d;
                }
                loss_sum += se / kGridSize;
                net.backward(cache, grad_out, grads);
            }
            adam_step(net.parameters(), grads, adam, lr);
        }
        const double loss = loss_sum / static_cast<double>(data.size());
        if (!std::isfinite(loss)) {
            throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                        " (lr " + std::to_string(lr) + ")");
        }
        result.history.push_back({epoch, loss, lr});
        if (after_epoch) after_epoch(epoch, net);
    }
    return result;
}

void write_loss_csv(std::ostream& out, const TrainResult& result) {
    out << "epoch,loss,lr\n" << std::setprecision(17);
    for (const auto& r : result.history) out << r.epoch << ',' << r.loss << ',' << r.lr << '\n';
}

void save_model(const SurrogateNet& net, std::ostream& out) {
    const auto& a = net.architecture();
    binary::write_magic(out, kModelMagic);
    binary::write<std::uint32_t>(out, kModelVersion);
    binary::write<std::int32_t>(out, a.input_dim);
    binary::write<std::int32_t>(out, a.channels);
    binary::write<std::int32_t>(out, a.conv_layers);
    binary::write<std::int32_t>(out, a.final_relu ? 1 : 0);
    binary::write<std::uint64_t>(out, net.parameter_count());
    for (const auto& t : net.parameters()) {
        for (double x : t.data) binary::write<double>(out, x);
    }
    const Normalization& n = net.normalization();
    binary::write<std::uint64_t>(out, n.input_mean.size());
    for (double x : n.input_mean) binary::write<double>(out, x);
    binary::write<double>(out, n.input_scale);
    binary::write<std::uint64_t>(out, n.output_mean.size());
    for (double x : n.output_mean) binary::write<double>(out, x);
    binary::write<double>(out, n.output_scale);
    if (!out) throw Error("failed writing model");
}

SurrogateNet load_model(std::istream& in) {
    binary::expect_magic(in, kModelMagic);
    const auto version = binary::read<std::uint32_t>(in, "version");
    if (version != kModelVersion) {
        throw FormatError("unsupported model format version " + std::to_string(version));
    }
    NetArchitecture a;
    a.input_dim = binary::read<std::int32_t>(in, "input_dim");
    a.channels = binary::read<std::int32_t>(in, "channels");
    a.conv_layers = binary::read<std::int32_t>(in, "conv_layers");
    const auto final_relu = binary::read<std::int32_t>(in, "final_relu");
    if (a.input_dim < 1 || a.channels < 1 || a.conv_layers < 1 || (final_relu != 0 && final_relu != 1)) {
        throw FormatError("model header holds an invalid architecture");
    }
    a.final_relu = final_relu == 1;
    SurrogateNet net(a);
    const auto count = binary::read<std::uint64_t>(in, "parameter count");
    if (count != net.parameter_count()) throw FormatError("parameter count does not match the architecture");
    for (auto& t : net.parameters()) {
        for (double& x : t.data) x = binary::read<double>(in, "parameters");
    }
    Normalization n;
    auto read_vector = [&](std::vector<double>& v, std::size_t expected) {
        const auto len = binary::read<std::uint64_t>(in, "normalization length");
        if (len != 0 && len != expected) throw FormatError("normalization length does not match the architecture");
        v.resize(len);
        for (double& x : v) x = binary::read<double>(in, "normalization");
    };
    read_vector(n.input_mean, static_cast<std::size_t>(a.input_dim));
    n.input_scale = binary::read<double>(in, "normalization");
    read_vector(n.output_mean, kGridSize);
    n.output_scale = binary::read<double>(in, "normalization");
    try {
        net.set_normalization(std::move(n));
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("model normalization: ") + e.what());
    }
    return net;
}

void save_model(const SurrogateNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    save_model(net, out);
}

SurrogateNet load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return load_model(in);
}

} // namespace mcmcnet
