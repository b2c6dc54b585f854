#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "arcus/matrix.hpp"

namespace arcus {

/// Symmetric dense autoencoder with tanh hidden layers and a linear output layer.
///
/// Parameters live in one flat buffer so that optimizers and model merging can
/// treat them as a single vector. Transition `l` maps layer `l` to layer `l + 1`
/// and owns a weight block (out x in, row-major) followed by a bias block (out).
class DenseAutoencoder {
public:
    /// All parameters start at zero. `layer_dims` must be palindromic, have
    /// at least three entries, and a middle (latent) entry smaller than the ends.
    explicit DenseAutoencoder(std::vector<std::size_t> layer_dims);

    const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
    std::size_t input_dim() const noexcept { return dims_.front(); }
    std::size_t latent_dim() const noexcept { return dims_[latent_layer()]; }
    /// Index into layer_dims() of the bottleneck layer.
    std::size_t latent_layer() const noexcept { return (dims_.size() - 1) / 2; }
    std::size_t num_transitions() const noexcept { return dims_.size() - 1; }
    std::size_t param_count() const noexcept { return params_.size(); }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    std::span<double> weights(std::size_t transition) noexcept;
    std::span<const double> weights(std::size_t transition) const noexcept;
    std::span<double> bias(std::size_t transition) noexcept;
    std::span<const double> bias(std::size_t transition) const noexcept;

    /// Offset of a transition's weight block inside parameters().
    std::size_t weight_offset(std::size_t transition) const noexcept { return offsets_[transition]; }

    bool same_architecture(const DenseAutoencoder& other) const noexcept {
        return dims_ == other.dims_;
    }

    friend bool operator==(const DenseAutoencoder&, const DenseAutoencoder&) = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t minibatch_size = 32;

    friend bool operator==(const AdamOptions&, const AdamOptions&) = default;
};

/// Adaptive-moment optimizer state for one model.
class OptimizerState {
public:
    OptimizerState(std::size_t param_count, AdamOptions options = {});

    const AdamOptions& options() const noexcept { return options_; }
    std::uint64_t step() const noexcept { return step_; }
    std::span<const double> first_moment() const noexcept { return m_; }
    std::span<const double> second_moment() const noexcept { return v_; }

    /// One bias-corrected update of `params` along `grad`.
    void apply(std::span<double> params, std::span<const double> grad);

    /// Same options, zeroed moments and step counter.
    OptimizerState fresh() const { return OptimizerState(m_.size(), options_); }

    friend bool operator==(const OptimizerState&, const OptimizerState&) = default;

private:
    AdamOptions options_;
    std::uint64_t step_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

/// Encoder widths from `input_dim` down to `latent_dim` over `n_hidden_layers`
/// steps: the floor of the linear interpolation, ending exactly at latent_dim.
std::vector<std::size_t> encoder_dims(std::size_t input_dim, std::size_t latent_dim,
                                      int n_hidden_layers);

/// Seeded Glorot-uniform weights, zero biases.
DenseAutoencoder init_model(std::size_t input_dim, std::size_t latent_dim, int n_hidden_layers,
                            std::uint64_t seed);

struct ForwardResult {
    Matrix latent;
    Matrix reconstruction;
};

ForwardResult forward(const DenseAutoencoder& model, const Matrix& x);

/// Encoder half of forward().
Matrix latent(const DenseAutoencoder& model, const Matrix& x);

/// Per-row squared reconstruction error divided by the input width.
std::vector<double> reconstruction_scores(const DenseAutoencoder& model, const Matrix& x);

/// Mean squared reconstruction error over all entries of `x`.
double reconstruction_loss(const DenseAutoencoder& model, const Matrix& x);

/// Writes d(loss)/d(theta) for the mean squared error loss into `grad`
/// (length param_count) and returns the loss.
double loss_gradient(const DenseAutoencoder& model, const Matrix& x, std::span<double> grad);

/// Runs `epochs` passes of mini-batch Adam over the rows of `x`, in row order,
/// with the last mini-batch possibly short. Returns the mean mini-batch loss
/// of each epoch. Throws NumericDivergence on a non-finite loss.
std::vector<double> train_epochs(DenseAutoencoder& model, OptimizerState& opt, const Matrix& x,
                                 int epochs);

}  // namespace arcus
