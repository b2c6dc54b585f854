#include "arcus/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "arcus/error.hpp"

namespace arcus {

namespace {

void check_input(const DenseAutoencoder& model, const Matrix& x, const char* who) {
    if (x.cols() != model.input_dim()) {
        throw DimensionError(std::string(who) + ": input has " + std::to_string(x.cols()) +
                             " columns, model expects " + std::to_string(model.input_dim()));
    }
}

// Applies transition `t` to `in`, writing into `out` (resized as needed).
void apply_transition(const DenseAutoencoder& model, std::size_t t, const Matrix& in, Matrix& out) {
    const auto& dims = model.layer_dims();
    const std::size_t n_in = dims[t];
    const std::size_t n_out = dims[t + 1];
    const bool hidden = t + 1 < model.num_transitions();
    const auto w = model.weights(t);
    const auto b = model.bias(t);
    if (out.rows() != in.rows() || out.cols() != n_out) {
        out = Matrix(in.rows(), n_out);
    }
    for (std::size_t i = 0; i < in.rows(); ++i) {
        const auto xi = in.row(i);
        auto yi = out.row(i);
        for (std::size_t o = 0; o < n_out; ++o) {
            const double* wo = w.data() + o * n_in;
            double acc = b[o];
            for (std::size_t k = 0; k < n_in; ++k) {
                acc += wo[k] * xi[k];
            }
            yi[o] = hidden ? std::tanh(acc) : acc;
        }
    }
}

// Fills acts[0..upto] with the layer activations; acts[0] is a copy of x.
void forward_layers(const DenseAutoencoder& model, const Matrix& x, std::vector<Matrix>& acts,
                    std::size_t upto) {
    acts.resize(upto + 1);
    acts[0] = x;
    for (std::size_t t = 0; t < upto; ++t) {
        apply_transition(model, t, acts[t], acts[t + 1]);
    }
}

}  // namespace

DenseAutoencoder::DenseAutoencoder(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
    if (dims_.size() < 3 || dims_.size() % 2 == 0) {
        throw InvalidArgument("autoencoder needs an odd number (>= 3) of layers");
    }
    if (!std::equal(dims_.begin(), dims_.end(), dims_.rbegin())) {
        throw InvalidArgument("autoencoder layer sizes must be palindromic");
    }
    if (std::any_of(dims_.begin(), dims_.end(), [](std::size_t d) { return d == 0; })) {
        throw InvalidArgument("autoencoder layer sizes must be positive");
    }
    if (dims_[latent_layer()] >= dims_.front()) {
        throw InvalidArgument("latent dimensionality must be smaller than input dimensionality");
    }
    std::size_t total = 0;
    for (std::size_t t = 0; t + 1 < dims_.size(); ++t) {
        offsets_.push_back(total);
        total += dims_[t] * dims_[t + 1] + dims_[t + 1];
    }
    params_.assign(total, 0.0);
}

std::span<double> DenseAutoencoder::weights(std::size_t t) noexcept {
    return {params_.data() + offsets_[t], dims_[t] * dims_[t + 1]};
}
std::span<const double> DenseAutoencoder::weights(std::size_t t) const noexcept {
    return {params_.data() + offsets_[t], dims_[t] * dims_[t + 1]};
}
std::span<double> DenseAutoencoder::bias(std::size_t t) noexcept {
    return {params_.data() + offsets_[t] + dims_[t] * dims_[t + 1], dims_[t + 1]};
}
std::span<const double> DenseAutoencoder::bias(std::size_t t) const noexcept {
    return {params_.data() + offsets_[t] + dims_[t] * dims_[t + 1], dims_[t + 1]};
}

OptimizerState::OptimizerState(std::size_t param_count, AdamOptions options)
    : options_(options), m_(param_count, 0.0), v_(param_count, 0.0) {
    if (!(options_.learning_rate > 0.0)) {
        throw InvalidArgument("learning rate must be positive");
    }
    if (options_.minibatch_size == 0) {
        throw InvalidArgument("mini-batch size must be positive");
    }
}

void OptimizerState::apply(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw DimensionError("optimizer state does not match parameter count");
    }
    ++step_;
    const auto& o = options_;
    const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(step_));
    const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = o.beta1 * m_[i] + (1.0 - o.beta1) * grad[i];
        v_[i] = o.beta2 * v_[i] + (1.0 - o.beta2) * grad[i] * grad[i];
        const double m_hat = m_[i] / correction1;
        const double v_hat = v_[i] / correction2;
        params[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
}

std::vector<std::size_t> encoder_dims(std::size_t input_dim, std::size_t latent_dim,
                                      int n_hidden_layers) {
    if (latent_dim == 0 || latent_dim >= input_dim) {
        throw InvalidArgument("latent_dim must be in [1, input_dim)");
    }
    if (n_hidden_layers < 1) {
        throw InvalidArgument("n_hidden_layers must be at least 1");
    }
    std::vector<std::size_t> dims{input_dim};
    const double span = static_cast<double>(input_dim - latent_dim);
    for (int i = 1; i < n_hidden_layers; ++i) {
        const double width = static_cast<double>(input_dim) - span * i / n_hidden_layers;
        dims.push_back(std::max<std::size_t>(latent_dim, static_cast<std::size_t>(std::floor(width))));
    }
    dims.push_back(latent_dim);
    return dims;
}

DenseAutoencoder init_model(std::size_t input_dim, std::size_t latent_dim, int n_hidden_layers,
                            std::uint64_t seed) {
    auto dims = encoder_dims(input_dim, latent_dim, n_hidden_layers);
    for (std::size_t i = dims.size() - 1; i-- > 0;) {
        dims.push_back(dims[i]);
    }
    DenseAutoencoder model(std::move(dims));

    std::mt19937_64 rng(seed);
    const auto& d = model.layer_dims();
    for (std::size_t t = 0; t < model.num_transitions(); ++t) {
        const double limit = std::sqrt(6.0 / static_cast<double>(d[t] + d[t + 1]));
        for (double& w : model.weights(t)) {
            // 53 random bits -> [0, 1), independent of the library's distributions.
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            w = limit * (2.0 * u - 1.0);
        }
    }
    return model;
}

ForwardResult forward(const DenseAutoencoder& model, const Matrix& x) {
    check_input(model, x, "forward");
    std::vector<Matrix> acts;
    forward_layers(model, x, acts, model.num_transitions());
    return {std::move(acts[model.latent_layer()]), std::move(acts.back())};
}

Matrix latent(const DenseAutoencoder& model, const Matrix& x) {
    check_input(model, x, "latent");
    std::vector<Matrix> acts;
    forward_layers(model, x, acts, model.latent_layer());
    return std::move(acts.back());
}

std::vector<double> reconstruction_scores(const DenseAutoencoder& model, const Matrix& x) {
    check_input(model, x, "reconstruction_scores");
    std::vector<Matrix> acts;
    forward_layers(model, x, acts, model.num_transitions());
    const Matrix& xhat = acts.back();
    const double d = static_cast<double>(x.cols());
    std::vector<double> scores(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto a = x.row(i);
        const auto b = xhat.row(i);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double diff = a[k] - b[k];
            acc += diff * diff;
        }
        scores[i] = acc / d;
    }
    return scores;
}

double reconstruction_loss(const DenseAutoencoder& model, const Matrix& x) {
    const auto scores = reconstruction_scores(model, x);
    double acc = 0.0;
    for (double s : scores) {
        acc += s;
    }
    return scores.empty() ? 0.0 : acc / static_cast<double>(scores.size());
}

double loss_gradient(const DenseAutoencoder& model, const Matrix& x, std::span<double> grad) {
    check_input(model, x, "loss_gradient");
    if (grad.size() != model.param_count()) {
        throw DimensionError("gradient buffer does not match parameter count");
    }
    if (x.rows() == 0) {
        throw InvalidArgument("loss_gradient: empty input");
    }
    std::fill(grad.begin(), grad.end(), 0.0);

    const std::size_t n_t = model.num_transitions();
    const auto& dims = model.layer_dims();
    std::vector<Matrix> acts;
    forward_layers(model, x, acts, n_t);

    // loss = sum((xhat - x)^2) / (rows * cols)
    const double scale = 1.0 / static_cast<double>(x.rows() * x.cols());
    Matrix delta(x.rows(), x.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        const auto yi = acts.back().row(i);
        auto di = delta.row(i);
        for (std::size_t k = 0; k < xi.size(); ++k) {
            const double diff = yi[k] - xi[k];
            loss += diff * diff;
            di[k] = 2.0 * diff * scale;
        }
    }
    loss *= scale;

    Matrix prev;
    for (std::size_t t = n_t; t-- > 0;) {
        const std::size_t n_in = dims[t];
        const std::size_t n_out = dims[t + 1];
        const Matrix& in = acts[t];
        const auto w = model.weights(t);
        double* gw = grad.data() + model.weight_offset(t);
        double* gb = gw + n_in * n_out;

        const bool propagate = t > 0;
        if (propagate) {
            prev = Matrix(x.rows(), n_in);
        }
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto in_i = in.row(i);
            const auto d_i = delta.row(i);
            for (std::size_t o = 0; o < n_out; ++o) {
                const double d = d_i[o];
                gb[o] += d;
                double* gwo = gw + o * n_in;
                for (std::size_t k = 0; k < n_in; ++k) {
                    gwo[k] += d * in_i[k];
                }
                if (propagate) {
                    const double* wo = w.data() + o * n_in;
                    auto p_i = prev.row(i);
                    for (std::size_t k = 0; k < n_in; ++k) {
                        p_i[k] += d * wo[k];
                    }
                }
            }
        }
        if (propagate) {
            // Layer t is a hidden tanh layer: scale by 1 - a^2.
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const auto a_i = in.row(i);
                auto p_i = prev.row(i);
                for (std::size_t k = 0; k < n_in; ++k) {
                    p_i[k] *= 1.0 - a_i[k] * a_i[k];
                }
            }
            std::swap(delta, prev);
        }
    }
    return loss;
}

std::vector<double> train_epochs(DenseAutoencoder& model, OptimizerState& opt, const Matrix& x,
                                 int epochs) {
    check_input(model, x, "train_epochs");
    if (epochs < 1) {
        throw InvalidArgument("train_epochs: epochs must be >= 1");
    }
    if (x.rows() == 0) {
        throw InvalidArgument("train_epochs: empty input");
    }
    const std::size_t mb = opt.options().minibatch_size;
    std::vector<double> grad(model.param_count());
    std::vector<double> epoch_losses;
    epoch_losses.reserve(static_cast<std::size_t>(epochs));
    for (int e = 0; e < epochs; ++e) {
        double total = 0.0;
        std::size_t n_mb = 0;
        for (std::size_t first = 0; first < x.rows(); first += mb, ++n_mb) {
            const std::size_t count = std::min(mb, x.rows() - first);
            const Matrix chunk = x.slice_rows(first, count);
            const double loss = loss_gradient(model, chunk, grad);
            if (!std::isfinite(loss)) {
                throw NumericDivergence(e, n_mb);
            }
            opt.apply(model.parameters(), grad);
            total += loss;
        }
        if (!std::all_of(model.parameters().begin(), model.parameters().end(),
                         [](double v) { return std::isfinite(v); })) {
            throw NumericDivergence(e, n_mb - 1);
        }
        epoch_losses.push_back(total / static_cast<double>(n_mb));
    }
    return epoch_losses;
}

}  // namespace arcus
