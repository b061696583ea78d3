#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ranklens/matrix.hpp"
#include "ranklens/rng.hpp"

namespace ranklens {

enum class Activation { kReLU, kIdentity };

/// One dense layer: out = act(W x + b), weights stored out x in.
struct Layer {
    Matrix weights;
    std::vector<double> bias;
    Activation activation = Activation::kReLU;

    std::size_t input_dim() const { return weights.cols; }
    std::size_t output_dim() const { return weights.rows; }
};

// ReLU derivative recovered from the post-activation value; the subgradient
// at exactly 0 is defined to be 0.
inline double activation_derivative(Activation act, double post) {
    if (act == Activation::kIdentity) return 1.0;
    return post > 0.0 ? 1.0 : 0.0;
}

/// Small feed-forward encoder. Stands in for the deep backbone: a stack of
/// dense layers whose final output is the embedding.
class MlpEncoder {
public:
    MlpEncoder() = default;

    explicit MlpEncoder(std::vector<Layer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw std::invalid_argument("MlpEncoder: no layers");
        for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
            if (layers_[i].output_dim() != layers_[i + 1].input_dim())
                throw std::invalid_argument("MlpEncoder: layer dimensions do not chain");
        }
        for (const Layer& l : layers_) {
            if (l.bias.size() != l.output_dim())
                throw std::invalid_argument("MlpEncoder: bias length != output dim");
            if (!l.weights.is_finite() || !all_finite(l.bias))
                throw std::invalid_argument("MlpEncoder: non-finite parameters");
        }
    }

    std::size_t layer_count() const { return layers_.size(); }
    std::size_t input_dim() const { return layers_.front().input_dim(); }
    std::size_t embedding_dim() const { return layers_.back().output_dim(); }

    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    Layer& layer(std::size_t i) { return layers_.at(i); }

private:
    std::vector<Layer> layers_;
};

/// Per-layer post-activations for a batch, plus the input batch itself.
/// The last entry is the embedding batch.
struct ActivationTrace {
    Matrix input;
    std::vector<Matrix> layer_outputs;

    const Matrix& embeddings() const { return layer_outputs.back(); }
    std::size_t batch_size() const { return input.rows; }
};

inline ActivationTrace forward(const MlpEncoder& encoder, const Matrix& batch) {
    if (batch.cols != encoder.input_dim())
        throw std::invalid_argument("forward: batch cols != encoder input dim");
    ActivationTrace trace;
    trace.input = batch;
    trace.layer_outputs.reserve(encoder.layer_count());
    const Matrix* prev = &trace.input;
    for (const Layer& layer : encoder.layers()) {
        Matrix out(prev->rows, layer.output_dim());
        for (std::size_t m = 0; m < prev->rows; ++m) {
            const double* x = prev->row(m);
            double* y = out.row(m);
            for (std::size_t o = 0; o < layer.output_dim(); ++o) {
                const double* w = layer.weights.row(o);
                double z = layer.bias[o];
                for (std::size_t i = 0; i < layer.input_dim(); ++i) z += w[i] * x[i];
                y[o] = (layer.activation == Activation::kReLU && z < 0.0) ? 0.0 : z;
            }
        }
        trace.layer_outputs.push_back(std::move(out));
        prev = &trace.layer_outputs.back();
    }
    return trace;
}

inline std::vector<double> embed(const MlpEncoder& encoder, const std::vector<double>& x) {
    return forward(encoder, Matrix::from_row(x)).embeddings().row_copy(0);
}

/// Single linear regression output on top of the embedding.
struct LinearHead {
    std::vector<double> weights;
    double bias = 0.0;
};

inline double head_output(const LinearHead& head, const std::vector<double>& embedding) {
    if (embedding.size() != head.weights.size())
        throw std::invalid_argument("head_output: embedding length != head dim");
    return dot(head.weights, embedding) + head.bias;
}

/// Runs the layers strictly above `layer_index` on a given post-activation
/// vector, returning the embedding. Used for path integrals in activation
/// space, where intermediate points are not activations of any real input.
inline std::vector<double> forward_from_layer(const MlpEncoder& encoder,
                                              std::size_t layer_index,
                                              const std::vector<double>& activation) {
    if (layer_index >= encoder.layer_count())
        throw std::invalid_argument("forward_from_layer: invalid layer index");
    if (activation.size() != encoder.layer(layer_index).output_dim())
        throw std::invalid_argument("forward_from_layer: activation width mismatch");
    std::vector<double> a = activation;
    for (std::size_t i = layer_index + 1; i < encoder.layer_count(); ++i) {
        const Layer& layer = encoder.layer(i);
        std::vector<double> next(layer.output_dim());
        for (std::size_t o = 0; o < layer.output_dim(); ++o) {
            const double* w = layer.weights.row(o);
            double z = layer.bias[o];
            for (std::size_t k = 0; k < layer.input_dim(); ++k) z += w[k] * a[k];
            next[o] = (layer.activation == Activation::kReLU && z < 0.0) ? 0.0 : z;
        }
        a = std::move(next);
    }
    return a;
}

/// Gradient of the scalar head output with respect to the post-activation of
/// layer `layer_index`, evaluated at the given activation value. Backpropagates
/// only through the layers above `layer_index`.
inline std::vector<double> grad_from_layer(const MlpEncoder& encoder, const LinearHead& head,
                                           std::size_t layer_index,
                                           const std::vector<double>& activation) {
    if (layer_index >= encoder.layer_count())
        throw std::invalid_argument("grad_from_layer: invalid layer index");
    if (activation.size() != encoder.layer(layer_index).output_dim())
        throw std::invalid_argument("grad_from_layer: activation width mismatch");

    // Forward through the upper layers, keeping post-activations.
    std::vector<std::vector<double>> post;  // post[i] for encoder layer layer_index+1+i
    std::vector<double> a = activation;
    for (std::size_t i = layer_index + 1; i < encoder.layer_count(); ++i) {
        const Layer& layer = encoder.layer(i);
        std::vector<double> next(layer.output_dim());
        for (std::size_t o = 0; o < layer.output_dim(); ++o) {
            const double* w = layer.weights.row(o);
            double z = layer.bias[o];
            for (std::size_t k = 0; k < layer.input_dim(); ++k) z += w[k] * a[k];
            next[o] = (layer.activation == Activation::kReLU && z < 0.0) ? 0.0 : z;
        }
        post.push_back(next);
        a = std::move(next);
    }
    if (head.weights.size() != encoder.embedding_dim())
        throw std::invalid_argument("grad_from_layer: head dim != embedding dim");

    std::vector<double> g = head.weights;
    for (std::size_t i = encoder.layer_count(); i-- > layer_index + 1;) {
        const Layer& layer = encoder.layer(i);
        const std::vector<double>& out = post[i - layer_index - 1];
        std::vector<double> delta(layer.output_dim());
        for (std::size_t o = 0; o < layer.output_dim(); ++o)
            delta[o] = g[o] * activation_derivative(layer.activation, out[o]);
        std::vector<double> gin(layer.input_dim(), 0.0);
        for (std::size_t o = 0; o < layer.output_dim(); ++o) {
            const double* w = layer.weights.row(o);
            for (std::size_t k = 0; k < layer.input_dim(); ++k) gin[k] += delta[o] * w[k];
        }
        g = std::move(gin);
    }
    return g;
}

/// d head_output / d (post-activation of layer `layer_index`) at input x,
/// by exact backpropagation through the layers above.
inline std::vector<double> grad_wrt_layer(const MlpEncoder& encoder, const LinearHead& head,
                                          const std::vector<double>& x, std::size_t layer_index) {
    if (layer_index >= encoder.layer_count())
        throw std::invalid_argument("grad_wrt_layer: invalid layer index");
    if (!all_finite(x)) throw std::invalid_argument("grad_wrt_layer: non-finite input");
    const ActivationTrace trace = forward(encoder, Matrix::from_row(x));
    return grad_from_layer(encoder, head, layer_index, trace.layer_outputs[layer_index].row_copy(0));
}

/// d head_output / d x by full backpropagation.
inline std::vector<double> grad_wrt_input(const MlpEncoder& encoder, const LinearHead& head,
                                          const std::vector<double>& x) {
    if (!all_finite(x)) throw std::invalid_argument("grad_wrt_input: non-finite input");
    const ActivationTrace trace = forward(encoder, Matrix::from_row(x));
    if (head.weights.size() != encoder.embedding_dim())
        throw std::invalid_argument("grad_wrt_input: head dim != embedding dim");

    std::vector<double> g = head.weights;
    for (std::size_t i = encoder.layer_count(); i-- > 0;) {
        const Layer& layer = encoder.layer(i);
        const double* out = trace.layer_outputs[i].row(0);
        std::vector<double> delta(layer.output_dim());
        for (std::size_t o = 0; o < layer.output_dim(); ++o)
            delta[o] = g[o] * activation_derivative(layer.activation, out[o]);
        std::vector<double> gin(layer.input_dim(), 0.0);
        for (std::size_t o = 0; o < layer.output_dim(); ++o) {
            const double* w = layer.weights.row(o);
            for (std::size_t k = 0; k < layer.input_dim(); ++k) gin[k] += delta[o] * w[k];
        }
        g = std::move(gin);
    }
    return g;
}

/// Parameter gradients for a whole batch, one entry per encoder layer.
struct EncoderGradients {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
};

/// Backpropagates d loss / d embeddings (one row per batch element) through
/// the encoder, accumulating parameter gradients. Optionally also returns
/// d loss / d input via `input_grads`.
inline EncoderGradients backward(const MlpEncoder& encoder, const ActivationTrace& trace,
                                 const Matrix& embedding_grads, Matrix* input_grads = nullptr) {
    if (embedding_grads.rows != trace.batch_size() ||
        embedding_grads.cols != encoder.embedding_dim())
        throw std::invalid_argument("backward: embedding grad shape mismatch");

    EncoderGradients grads;
    grads.weight_grads.resize(encoder.layer_count());
    grads.bias_grads.resize(encoder.layer_count());

    Matrix g = embedding_grads;
    for (std::size_t i = encoder.layer_count(); i-- > 0;) {
        const Layer& layer = encoder.layer(i);
        const Matrix& out = trace.layer_outputs[i];
        const Matrix& in = (i == 0) ? trace.input : trace.layer_outputs[i - 1];

        Matrix delta(g.rows, layer.output_dim());
        for (std::size_t m = 0; m < g.rows; ++m)
            for (std::size_t o = 0; o < layer.output_dim(); ++o)
                delta(m, o) = g(m, o) * activation_derivative(layer.activation, out(m, o));

        Matrix dW(layer.output_dim(), layer.input_dim());
        std::vector<double> db(layer.output_dim(), 0.0);
        for (std::size_t m = 0; m < delta.rows; ++m) {
            const double* d = delta.row(m);
            const double* x = in.row(m);
            for (std::size_t o = 0; o < layer.output_dim(); ++o) {
                db[o] += d[o];
                double* dwrow = dW.row(o);
                for (std::size_t k = 0; k < layer.input_dim(); ++k) dwrow[k] += d[o] * x[k];
            }
        }

        Matrix gin(delta.rows, layer.input_dim());
        for (std::size_t m = 0; m < delta.rows; ++m) {
            const double* d = delta.row(m);
            double* gi = gin.row(m);
            for (std::size_t o = 0; o < layer.output_dim(); ++o) {
                const double* w = layer.weights.row(o);
                for (std::size_t k = 0; k < layer.input_dim(); ++k) gi[k] += d[o] * w[k];
            }
        }

        grads.weight_grads[i] = std::move(dW);
        grads.bias_grads[i] = std::move(db);
        g = std::move(gin);
    }
    if (input_grads) *input_grads = std::move(g);
    return grads;
}

/// Fresh encoder with uniform fan-in initialization: weights in [-s, s] with
/// s = sqrt(6 / fan_in), biases zero. Deterministic for a fixed seed.
/// `layer_sizes` lists input dim followed by each layer's output dim; all
/// hidden layers use ReLU, the final (embedding) layer is linear.
inline MlpEncoder init_encoder(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("init_encoder: need at least input and output sizes");
    Rng rng(derive_seed(seed, 0x6d6c70ULL));
    std::vector<Layer> layers;
    layers.reserve(layer_sizes.size() - 1);
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
        const std::size_t fan_in = layer_sizes[i];
        const std::size_t fan_out = layer_sizes[i + 1];
        if (fan_in == 0 || fan_out == 0)
            throw std::invalid_argument("init_encoder: zero layer size");
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in));
        Layer layer;
        layer.weights = Matrix(fan_out, fan_in);
        for (double& w : layer.weights.data) w = rng.uniform(-s, s);
        layer.bias.assign(fan_out, 0.0);
        const bool last = (i + 2 == layer_sizes.size());
        layer.activation = last ? Activation::kIdentity : Activation::kReLU;
        layers.push_back(std::move(layer));
    }
    return MlpEncoder(std::move(layers));
}

}  // namespace ranklens
