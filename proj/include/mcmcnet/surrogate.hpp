#pragma once

#include "mcmcnet/kernels.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mcmcnet {

/// Shape plus row-major data.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    std::size_t size() const { return data.size(); }
    bool operator==(const Tensor&) const = default;
};

constexpr int kGridSide = 16;
constexpr int kGridSize = kGridSide * kGridSide;

struct NetArchitecture {
    int input_dim = 1;
    /// Hidden channel count of the convolution stack.
    int channels = 16;
    int conv_layers = 4;
    /// Apply ReLU after the last convolution as well.
    bool final_relu = false;

    bool operator==(const NetArchitecture&) const = default;
};

/// Parameter groups in declaration order: dense weight (input_dim x 256),
/// dense bias (256), then weight (out, in, 3, 3) and bias (out) for each
/// convolution. Gradients and optimizer moments use the same layout.
using ParameterSet = std::vector<Tensor>;

/// Fixed affine maps around the trainable layers: the dense layer sees
/// (x - input_mean) / input_scale and the network returns
/// output_scale * y + output_mean. Empty means vectors are zero; the default
/// is the identity.
struct Normalization {
    std::vector<double> input_mean;
    double input_scale = 1.0;
    std::vector<double> output_mean;
    double output_scale = 1.0;

    bool operator==(const Normalization&) const = default;
};

/// Activations kept by a forward pass for the backward pass.
struct ForwardCache {
    /// Normalized input.
    std::vector<double> input;
    /// Post-activation output of every layer; [0] is the dense layer reshaped
    /// to 16x16, the last entry is the network output.
    std::vector<std::vector<double>> activations;
    /// Pre-activation of every layer.
    std::vector<std::vector<double>> preactivations;
};

/// One dense layer reshaped to a single 16x16 channel, then a stack of
/// 3x3 same-padded convolutions with ReLU, ending in one output channel.
class SurrogateNet {
public:
    SurrogateNet() = default;
    explicit SurrogateNet(const NetArchitecture& arch);

    /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
    static SurrogateNet he_init(const NetArchitecture& arch, std::uint64_t seed);

    const NetArchitecture& architecture() const { return arch_; }
    ParameterSet& parameters() { return params_; }
    const ParameterSet& parameters() const { return params_; }
    std::size_t parameter_count() const;

    kernels::ConvShape conv_shape(int layer) const;

    const Normalization& normalization() const { return norm_; }
    void set_normalization(Normalization n);

    /// Returns the 16x16 output, row-major.
    std::vector<double> forward(std::span<const double> input) const;
    std::vector<double> forward(std::span<const double> input, ForwardCache& cache) const;

    /// Gradients of <grad_out, net(input)> with respect to every parameter.
    ParameterSet backward(const ForwardCache& cache, std::span<const double> grad_out) const;
    /// Accumulating variant used by training.
    void backward(const ForwardCache& cache, std::span<const double> grad_out, ParameterSet& grads) const;

    ParameterSet zero_like() const;

private:
    NetArchitecture arch_;
    ParameterSet params_;
    Normalization norm_;
};

struct AdamState {
    std::uint64_t step = 0;
    ParameterSet m;
    ParameterSet v;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(const ParameterSet& params);

/// Bias-corrected Adam update in place; increments `state.step`.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, double lr);

struct TrainConfig {
    int epochs = 100;
    int minibatch = 32;
    double lr = 1e-3;
    double lr_drop_factor = 1.0;
    int lr_drop_period = 1000000;
    std::uint64_t seed = 1;
};

void validate(const TrainConfig& cfg);

/// Inputs and 16x16 targets for training.
struct TrainingSet {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    std::size_t size() const { return inputs.size(); }
};

/// Per-feature means and one global RMS scale for inputs and targets.
Normalization fit_normalization(const TrainingSet& data);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
};

/// Mean squared error over the 16x16 output of one sample.
double sample_mse(const std::vector<double>& output, const std::vector<double>& target);
double dataset_mse(const SurrogateNet& net, const TrainingSet& data);

/// Minibatch Adam on the mean squared error. The learning rate is multiplied
/// by `lr_drop_factor` every `lr_drop_period` epochs. An optional callback
/// sees the net after each epoch (for checkpoints).
TrainResult train(SurrogateNet& net, const TrainingSet& data, const TrainConfig& cfg,
                  const std::function<void(int epoch, const SurrogateNet&)>& after_epoch = {});

void write_loss_csv(std::ostream& out, const TrainResult& result);

/// Versioned little-endian binary: magic, version, architecture, parameters.
void save_model(const SurrogateNet& net, const std::string& path);
SurrogateNet load_model(const std::string& path);
void save_model(const SurrogateNet& net, std::ostream& out);
SurrogateNet load_model(std::istream& in);

} // namespace mcmcnet
