#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "v2v/losses.hpp"
#include "v2v/numerics.hpp"

namespace v2v {

enum class Activation : std::uint8_t { ReLU = 0, Linear = 1 };

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::Linear;
};

struct Layer {
    Matrix weights; // out_dim x in_dim
    Vector bias;    // out_dim
    Activation activation = Activation::Linear;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }
};

/// Fully connected feed-forward network. Layers chain: each layer's input
/// dim equals the previous layer's output dim. Construction validates the
/// chain and that every parameter is finite.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<Layer> layers);

    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }
    std::size_t layer_count() const { return layers_.size(); }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

private:
    std::vector<Layer> layers_;
};

/// He-normal init for ReLU layers, Glorot-normal for Linear layers, zero
/// biases. The spec must chain and end in a Linear layer. Deterministic in
/// the seed.
Mlp init_mlp(const std::vector<LayerSpec>& spec, std::uint64_t seed);

Vector forward(const Mlp& net, const Vector& x);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

/// Mean gradient of the batch loss with respect to every parameter.
/// `inputs` are network inputs (not predictions); alpha is required for
/// the Ld/Gd losses and must be null otherwise.
Gradients backward(const Mlp& net, const std::vector<Vector>& inputs,
                   const std::vector<Vector>& targets, LossKind kind,
                   const AlphaVector* alpha = nullptr);

/// Jacobian of the network output with respect to the input at x
/// (output_dim x input_dim), using the same subgradient conventions as
/// backward (ReLU' at 0 is 0).
Matrix input_jacobian(const Mlp& net, const Vector& x);

enum class StopReason { MaxEpochs = 0, EarlyStop = 1 };

struct TrainConfig {
    std::vector<LayerSpec> layers;
    LossKind loss = LossKind::Mae;
    std::optional<AlphaVector> alpha; // required for Ld/Gd
    double learning_rate = 0.001;
    double lr_decay = 1.0; // per-epoch multiplier; 1 keeps the rate constant
    double momentum = 0.4;
    double weight_decay = 0.0; // L2 penalty on weights; biases are left alone
    std::size_t max_epochs = 20;
    std::size_t batch_size = 128;
    double validation_fraction = 0.1;
    std::size_t patience = 1;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainLog {
    std::vector<double> train_loss; // one entry per completed epoch
    std::vector<double> val_loss;
    std::vector<double> wall_time_s;
    StopReason stop_reason = StopReason::MaxEpochs;
    std::size_t best_epoch = 0; // index of the best validation epoch
};

struct TrainResult {
    Mlp net; // parameters from the best validation epoch
    TrainLog log;
};

/// Minibatch gradient descent with classical momentum and early stopping
/// on a held-out validation split. Deterministic: the same data and config
/// reproduce the same parameters and per-epoch losses (wall times aside).
/// A non-finite epoch loss raises TrainingDivergedError with the epoch.
TrainResult train(const std::vector<Vector>& inputs, const std::vector<Vector>& targets,
                  const TrainConfig& cfg);

/// Binary model file ("V2VM"): header, layer count, then per layer dims,
/// activation code, row-major weights and bias as little-endian doubles.
void save_model(const std::string& path, const Mlp& net);
Mlp load_model(const std::string& path);

} // namespace v2v
