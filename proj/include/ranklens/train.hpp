#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranklens/metrics.hpp"
#include "ranklens/mlp.hpp"
#include "ranklens/rnc.hpp"
#include "ranklens/rng.hpp"
#include "ranklens/synth.hpp"

namespace ranklens {

enum class OptimizerKind { kSgd, kAdam };

inline const char* optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::kSgd ? "sgd" : "adam";
}

inline OptimizerKind optimizer_from_name(const std::string& s) {
    if (s == "sgd") return OptimizerKind::kSgd;
    if (s == "adam") return OptimizerKind::kAdam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

/// Pixel-noise and horizontal-flip augmentation for the synthetic grids.
struct AugmentConfig {
    double noise_std = 0.02;
    bool horizontal_flip = true;
};

struct TrainConfig {
    std::size_t pretrain_steps = 400;
    std::size_t pretrain_epochs = 0;  // when > 0, overrides the step budget
    std::size_t probe_epochs = 100;
    std::size_t batch_scenes = 32;
    double pretrain_lr = 1.0;    // cosine annealed over pretrain_steps
    double probe_lr = 0.5;       // exponential decay over probe_epochs
    double baseline_lr = 0.05;   // exponential decay over pretrain_steps
    double lr_final_ratio = 0.02;
    double rnc_temperature = 2.0;
    OptimizerKind optimizer = OptimizerKind::kSgd;
    AugmentConfig augment;
    std::vector<std::size_t> hidden_widths = {64, 64};
    std::size_t embedding_dim = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if ((pretrain_steps == 0 && pretrain_epochs == 0) || probe_epochs == 0 ||
            batch_scenes == 0)
            throw std::invalid_argument("TrainConfig: counts must be positive");
        if (pretrain_lr < 0.0 || probe_lr < 0.0 || baseline_lr < 0.0)
            throw std::invalid_argument("TrainConfig: negative learning rate");
        if (!(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0))
            throw std::invalid_argument("TrainConfig: lr_final_ratio must be in (0, 1]");
        if (!(rnc_temperature > 0.0))
            throw std::invalid_argument("TrainConfig: temperature must be positive");
        if (embedding_dim == 0) throw std::invalid_argument("TrainConfig: embedding_dim == 0");
        if (augment.noise_std < 0.0)
            throw std::invalid_argument("TrainConfig: negative augment noise");
    }

    std::vector<std::size_t> layer_sizes(std::size_t input_dim) const {
        std::vector<std::size_t> sizes;
        sizes.push_back(input_dim);
        sizes.insert(sizes.end(), hidden_widths.begin(), hidden_widths.end());
        sizes.push_back(embedding_dim);
        return sizes;
    }

    /// Pretraining budget in optimizer steps; an epoch budget, when given,
    /// counts full passes over the train split instead.
    std::size_t pretrain_step_budget(std::size_t train_size) const {
        if (pretrain_epochs == 0) return pretrain_steps;
        const std::size_t batches_per_epoch =
            (train_size + batch_scenes - 1) / batch_scenes;
        return pretrain_epochs * std::max<std::size_t>(1, batches_per_epoch);
    }
};

inline double cosine_lr(double lr0, std::size_t step, std::size_t total_steps) {
    if (total_steps <= 1) return lr0;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

inline double exponential_lr(double lr0, double final_ratio, std::size_t step,
                             std::size_t total_steps) {
    if (total_steps <= 1) return lr0;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    return lr0 * std::pow(final_ratio, t);
}

namespace detail {

inline void flip_horizontal(std::vector<double>& grid, std::size_t height, std::size_t width) {
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width / 2; ++c) {
            const std::size_t a = (r * width + c) * 3;
            const std::size_t b = (r * width + (width - 1 - c)) * 3;
            for (std::size_t ch = 0; ch < 3; ++ch) std::swap(grid[a + ch], grid[b + ch]);
        }
    }
}

inline std::vector<double> augment_view(const Scene& scene, const AugmentConfig& aug, Rng& rng) {
    std::vector<double> view = scene.grid;
    if (aug.horizontal_flip && rng.uniform() < 0.5)
        flip_horizontal(view, scene.height, scene.width);
    if (aug.noise_std > 0.0)
        for (double& v : view) v += aug.noise_std * rng.gaussian();
    return view;
}

inline std::vector<std::size_t> split_indices(const std::vector<Scene>& dataset, Split split) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (dataset[i].split == split) idx.push_back(i);
    return idx;
}

inline Matrix feature_matrix(const std::vector<Scene>& dataset,
                             const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("feature_matrix: empty index set");
    Matrix batch(indices.size(), dataset[indices[0]].feature_dim());
    for (std::size_t m = 0; m < indices.size(); ++m) {
        const Scene& s = dataset[indices[m]];
        if (s.feature_dim() != batch.cols)
            throw std::invalid_argument("feature_matrix: inconsistent scene dimensions");
        std::copy(s.grid.begin(), s.grid.end(), batch.row(m));
    }
    return batch;
}

/// SGD with optional Adam moments, covering encoder parameters and the head.
class Optimizer {
public:
    explicit Optimizer(OptimizerKind kind) : kind_(kind) {}

    void update_encoder(MlpEncoder& encoder, const EncoderGradients& grads, double lr) {
        if (kind_ == OptimizerKind::kSgd) {
            for (std::size_t i = 0; i < encoder.layer_count(); ++i) {
                Layer& layer = encoder.layer(i);
                apply_sgd(layer.weights.data, grads.weight_grads[i].data, lr);
                apply_sgd(layer.bias, grads.bias_grads[i], lr);
            }
            return;
        }
        if (enc_m_.empty()) init_encoder_state(encoder);
        ++enc_t_;
        for (std::size_t i = 0; i < encoder.layer_count(); ++i) {
            Layer& layer = encoder.layer(i);
            apply_adam(layer.weights.data, grads.weight_grads[i].data, enc_m_[2 * i],
                       enc_v_[2 * i], lr, enc_t_);
            apply_adam(layer.bias, grads.bias_grads[i], enc_m_[2 * i + 1], enc_v_[2 * i + 1], lr,
                       enc_t_);
        }
    }

    void update_head(LinearHead& head, const std::vector<double>& grad_w, double grad_b,
                     double lr) {
        if (kind_ == OptimizerKind::kSgd) {
            apply_sgd(head.weights, grad_w, lr);
            head.bias -= lr * grad_b;
            return;
        }
        if (head_m_.empty()) {
            head_m_.assign(head.weights.size() + 1, 0.0);
            head_v_.assign(head.weights.size() + 1, 0.0);
        }
        ++head_t_;
        std::vector<double> g = grad_w;
        g.push_back(grad_b);
        std::vector<double> p = head.weights;
        p.push_back(head.bias);
        apply_adam(p, g, head_m_, head_v_, lr, head_t_);
        head.bias = p.back();
        p.pop_back();
        head.weights = std::move(p);
    }

private:
    static void apply_sgd(std::vector<double>& params, const std::vector<double>& grads,
                          double lr) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
    }

    static void apply_adam(std::vector<double>& params, const std::vector<double>& grads,
                           std::vector<double>& m, std::vector<double>& v, double lr,
                           std::size_t t) {
        constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grads[i];
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grads[i] * grads[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
        }
    }

    void init_encoder_state(const MlpEncoder& encoder) {
        for (std::size_t i = 0; i < encoder.layer_count(); ++i) {
            enc_m_.emplace_back(encoder.layer(i).weights.data.size(), 0.0);
            enc_v_.emplace_back(encoder.layer(i).weights.data.size(), 0.0);
            enc_m_.emplace_back(encoder.layer(i).bias.size(), 0.0);
            enc_v_.emplace_back(encoder.layer(i).bias.size(), 0.0);
        }
    }

    OptimizerKind kind_;
    std::vector<std::vector<double>> enc_m_, enc_v_;
    std::vector<double> head_m_, head_v_;
    std::size_t enc_t_ = 0, head_t_ = 0;
};

/// Hands out shuffled train-set batches, reshuffling at epoch boundaries.
class BatchSampler {
public:
    BatchSampler(std::vector<std::size_t> indices, std::size_t batch, std::uint64_t seed)
        : indices_(std::move(indices)), batch_(batch), rng_(seed) {
        if (indices_.empty()) throw std::invalid_argument("BatchSampler: empty index set");
        rng_.shuffle(indices_);
    }

    std::vector<std::size_t> next() {
        if (cursor_ >= indices_.size()) {
            rng_.shuffle(indices_);
            cursor_ = 0;
        }
        const std::size_t take = std::min(batch_, indices_.size() - cursor_);
        std::vector<std::size_t> out(indices_.begin() + cursor_,
                                     indices_.begin() + cursor_ + take);
        cursor_ += take;
        return out;
    }

private:
    std::vector<std::size_t> indices_;
    std::size_t batch_;
    std::size_t cursor_ = 0;
    Rng rng_;
};

}  // namespace detail

/// Embeddings for a subset of scenes, without augmentation.
inline Matrix embed_scenes(const MlpEncoder& encoder, const std::vector<Scene>& dataset,
                           const std::vector<std::size_t>& indices) {
    return forward(encoder, detail::feature_matrix(dataset, indices)).embeddings();
}

struct PretrainResult {
    MlpEncoder encoder;
    std::vector<double> loss_curve;  // one batch loss per step
};

/// Stage one: stochastic gradient descent on the rank contrastive loss over
/// shuffled train batches, two augmented views per scene, cosine-annealed
/// learning rate. Deterministic for a fixed config.
inline PretrainResult pretrain_rnc(MlpEncoder encoder, const std::vector<Scene>& dataset,
                                   const TrainConfig& config) {
    config.validate();
    const std::vector<std::size_t> train = detail::split_indices(dataset, Split::kTrain);
    if (train.empty()) throw std::invalid_argument("pretrain_rnc: empty train split");

    detail::BatchSampler sampler(train, config.batch_scenes,
                                 derive_seed(config.seed, 0x70726574ULL));
    Rng aug_rng(derive_seed(config.seed, 0x61756774ULL));
    detail::Optimizer opt(config.optimizer);
    RncConfig rnc_config;
    rnc_config.temperature = config.rnc_temperature;

    const std::size_t total_steps = config.pretrain_step_budget(train.size());
    PretrainResult result;
    result.loss_curve.reserve(total_steps);
    for (std::size_t step = 0; step < total_steps; ++step) {
        const std::vector<std::size_t> batch_idx = sampler.next();
        const std::size_t views = batch_idx.size() * 2;

        Matrix batch(views, dataset[batch_idx[0]].feature_dim());
        RncBatch rnc_batch;
        rnc_batch.labels.resize(views);
        for (std::size_t b = 0; b < batch_idx.size(); ++b) {
            const Scene& scene = dataset[batch_idx[b]];
            for (std::size_t v = 0; v < 2; ++v) {
                const std::vector<double> view =
                    detail::augment_view(scene, config.augment, aug_rng);
                std::copy(view.begin(), view.end(), batch.row(2 * b + v));
                rnc_batch.labels[2 * b + v] = scene.target;
            }
        }

        const ActivationTrace trace = forward(encoder, batch);
        rnc_batch.embeddings = trace.embeddings();
        const RncLossOutput loss = rnc_loss(rnc_batch, rnc_config);
        const EncoderGradients grads = backward(encoder, trace, loss.grad);
        opt.update_encoder(encoder, grads, cosine_lr(config.pretrain_lr, step, total_steps));
        result.loss_curve.push_back(loss.value);
    }
    result.encoder = std::move(encoder);
    return result;
}

struct ProbeEpochStat {
    std::size_t epoch = 0;
    double train_mae = 0.0;
    double val_r2 = 0.0;
};

struct ProbeResult {
    LinearHead head;  // snapshot from the best validation epoch
    std::vector<ProbeEpochStat> curve;
    std::size_t best_epoch = 0;
    double best_val_r2 = 0.0;
};

/// Stage two: the encoder is frozen and a single linear layer is fit to the
/// train embeddings with full-batch L1 subgradient descent. Descent runs on
/// embeddings standardized by the train-split statistics (the raw embedding
/// scales vary enough per dimension to stall plain subgradient steps); the
/// affine transform is folded back into the head after every epoch, so the
/// returned head applies to raw embeddings and the selected validation R^2 is
/// reproduced exactly on re-evaluation.
inline ProbeResult train_probe(const MlpEncoder& frozen_encoder,
                               const std::vector<Scene>& dataset, const TrainConfig& config) {
    config.validate();
    const std::vector<std::size_t> train = detail::split_indices(dataset, Split::kTrain);
    const std::vector<std::size_t> val = detail::split_indices(dataset, Split::kVal);
    if (train.empty()) throw std::invalid_argument("train_probe: empty train split");
    if (val.empty()) throw std::invalid_argument("train_probe: empty val split");

    const Matrix train_emb = embed_scenes(frozen_encoder, dataset, train);
    const Matrix val_emb = embed_scenes(frozen_encoder, dataset, val);
    std::vector<double> train_y(train.size()), val_y(val.size());
    for (std::size_t i = 0; i < train.size(); ++i) train_y[i] = dataset[train[i]].target;
    for (std::size_t i = 0; i < val.size(); ++i) val_y[i] = dataset[val[i]].target;

    const std::size_t dim = frozen_encoder.embedding_dim();
    const double inv_n = 1.0 / static_cast<double>(train.size());

    std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
    for (std::size_t m = 0; m < train.size(); ++m)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += train_emb(m, d) * inv_n;
    for (std::size_t m = 0; m < train.size(); ++m)
        for (std::size_t d = 0; d < dim; ++d) {
            const double c = train_emb(m, d) - mean[d];
            scale[d] += c * c * inv_n;
        }
    for (double& s : scale) s = std::max(std::sqrt(s), 1e-12);

    Matrix std_emb(train.size(), dim);
    for (std::size_t m = 0; m < train.size(); ++m)
        for (std::size_t d = 0; d < dim; ++d)
            std_emb(m, d) = (train_emb(m, d) - mean[d]) / scale[d];

    LinearHead std_head;  // operates on standardized embeddings
    std_head.weights.assign(dim, 0.0);
    detail::Optimizer opt(config.optimizer);

    auto folded = [&]() {
        LinearHead head;
        head.weights.resize(dim);
        head.bias = std_head.bias;
        for (std::size_t d = 0; d < dim; ++d) {
            head.weights[d] = std_head.weights[d] / scale[d];
            head.bias -= std_head.weights[d] * mean[d] / scale[d];
        }
        return head;
    };

    ProbeResult result;
    result.head = folded();
    result.best_val_r2 = -std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < config.probe_epochs; ++epoch) {
        std::vector<double> grad_w(dim, 0.0);
        double grad_b = 0.0;
        for (std::size_t m = 0; m < train.size(); ++m) {
            const double* e = std_emb.row(m);
            double pred = std_head.bias;
            for (std::size_t d = 0; d < dim; ++d) pred += std_head.weights[d] * e[d];
            const double r = pred - train_y[m];
            const double s = (r > 0.0) ? inv_n : (r < 0.0 ? -inv_n : 0.0);
            grad_b += s;
            for (std::size_t d = 0; d < dim; ++d) grad_w[d] += s * e[d];
        }
        opt.update_head(std_head, grad_w, grad_b,
                        exponential_lr(config.probe_lr, config.lr_final_ratio, epoch,
                                       config.probe_epochs));
        const LinearHead head = folded();

        double mae = 0.0;
        for (std::size_t m = 0; m < train.size(); ++m)
            mae += std::abs(head_output(head, train_emb.row_copy(m)) - train_y[m]);
        mae *= inv_n;

        std::vector<double> val_pred(val.size());
        for (std::size_t m = 0; m < val.size(); ++m)
            val_pred[m] = head_output(head, val_emb.row_copy(m));
        const double val_r2 = r_squared(val_pred, val_y);
        result.curve.push_back({epoch, mae, val_r2});
        if (val_r2 > result.best_val_r2) {
            result.best_val_r2 = val_r2;
            result.best_epoch = epoch;
            result.head = head;
        }
    }
    return result;
}

struct SupervisedResult {
    MlpEncoder encoder;
    LinearHead head;
    std::vector<double> loss_curve;  // batch mean absolute error per step
};

/// Baseline: encoder and head trained jointly on the L1 loss with the same
/// step budget as pretraining and an exponentially decaying rate.
inline SupervisedResult train_supervised(MlpEncoder encoder, const std::vector<Scene>& dataset,
                                         const TrainConfig& config) {
    config.validate();
    const std::vector<std::size_t> train = detail::split_indices(dataset, Split::kTrain);
    if (train.empty()) throw std::invalid_argument("train_supervised: empty train split");

    detail::BatchSampler sampler(train, config.batch_scenes,
                                 derive_seed(config.seed, 0x73757076ULL));
    Rng aug_rng(derive_seed(config.seed, 0x73617567ULL));
    detail::Optimizer opt(config.optimizer);

    SupervisedResult result;
    LinearHead head;
    head.weights.assign(config.embedding_dim, 0.0);

    const std::size_t total_steps = config.pretrain_step_budget(train.size());
    for (std::size_t step = 0; step < total_steps; ++step) {
        const std::vector<std::size_t> batch_idx = sampler.next();
        Matrix batch(batch_idx.size(), dataset[batch_idx[0]].feature_dim());
        std::vector<double> labels(batch_idx.size());
        for (std::size_t b = 0; b < batch_idx.size(); ++b) {
            const Scene& scene = dataset[batch_idx[b]];
            const std::vector<double> view = detail::augment_view(scene, config.augment, aug_rng);
            std::copy(view.begin(), view.end(), batch.row(b));
            labels[b] = scene.target;
        }

        const ActivationTrace trace = forward(encoder, batch);
        const Matrix& emb = trace.embeddings();
        const std::size_t dim = emb.cols;
        const double inv_b = 1.0 / static_cast<double>(batch_idx.size());

        Matrix emb_grads(emb.rows, dim);
        std::vector<double> grad_w(dim, 0.0);
        double grad_b = 0.0;
        double mae = 0.0;
        for (std::size_t m = 0; m < emb.rows; ++m) {
            const double* e = emb.row(m);
            double pred = head.bias;
            for (std::size_t d = 0; d < dim; ++d) pred += head.weights[d] * e[d];
            const double r = pred - labels[m];
            mae += std::abs(r) * inv_b;
            const double s = (r > 0.0) ? inv_b : (r < 0.0 ? -inv_b : 0.0);
            grad_b += s;
            double* g = emb_grads.row(m);
            for (std::size_t d = 0; d < dim; ++d) {
                grad_w[d] += s * e[d];
                g[d] = s * head.weights[d];
            }
        }

        const EncoderGradients grads = backward(encoder, trace, emb_grads);
        const double lr =
            exponential_lr(config.baseline_lr, config.lr_final_ratio, step, total_steps);
        opt.update_encoder(encoder, grads, lr);
        opt.update_head(head, grad_w, grad_b, lr);
        result.loss_curve.push_back(mae);
    }
    result.encoder = std::move(encoder);
    result.head = std::move(head);
    return result;
}

/// Both stages bundled: the pretrained encoder (frozen from the probe stage
/// onward), the selected head, the loss curves, and the config snapshot.
struct TrainedPipeline {
    MlpEncoder encoder;
    bool encoder_frozen = true;  // the probe stage never touches the encoder
    LinearHead head;
    std::vector<double> pretrain_loss;
    std::vector<ProbeEpochStat> probe_curve;
    std::size_t best_epoch = 0;
    double best_val_r2 = 0.0;
    TrainConfig config;
};

inline TrainedPipeline train_pipeline(const MlpEncoder& initial,
                                      const std::vector<Scene>& dataset,
                                      const TrainConfig& config) {
    TrainedPipeline pipeline;
    pipeline.config = config;
    PretrainResult pre = pretrain_rnc(initial, dataset, config);
    pipeline.encoder = std::move(pre.encoder);
    pipeline.pretrain_loss = std::move(pre.loss_curve);
    ProbeResult probe = train_probe(pipeline.encoder, dataset, config);
    pipeline.head = std::move(probe.head);
    pipeline.probe_curve = std::move(probe.curve);
    pipeline.best_epoch = probe.best_epoch;
    pipeline.best_val_r2 = probe.best_val_r2;
    return pipeline;
}

/// Predictions for a split, no augmentation.
inline std::vector<double> predict_split(const MlpEncoder& encoder, const LinearHead& head,
                                         const std::vector<Scene>& dataset, Split split,
                                         std::vector<std::size_t>* indices_out = nullptr) {
    const std::vector<std::size_t> idx = detail::split_indices(dataset, split);
    if (idx.empty()) throw std::invalid_argument("predict_split: empty split");
    const Matrix emb = embed_scenes(encoder, dataset, idx);
    std::vector<double> preds(idx.size());
    for (std::size_t m = 0; m < idx.size(); ++m)
        preds[m] = head_output(head, emb.row_copy(m));
    if (indices_out) *indices_out = idx;
    return preds;
}

inline MetricsReport evaluate(const MlpEncoder& encoder, const LinearHead& head,
                              const std::vector<Scene>& dataset, Split split) {
    std::vector<std::size_t> idx;
    const std::vector<double> preds = predict_split(encoder, head, dataset, split, &idx);
    std::vector<double> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = dataset[idx[i]].target;
    MetricsReport report;
    report.split = split_name(split);
    report.r2 = r_squared(preds, labels);
    report.kendall_tau = kendall_tau(preds, labels);
    report.n = idx.size();
    return report;
}

inline MetricsReport evaluate(const TrainedPipeline& pipeline, const std::vector<Scene>& dataset,
                              Split split) {
    return evaluate(pipeline.encoder, pipeline.head, dataset, split);
}

/// How well embedding distances track label distances: Kendall tau between
/// the two distance profiles, averaged over randomly chosen anchors. Higher
/// means the latent space is more continuously ordered by the outcome.
inline double latent_ordering_score(const MlpEncoder& encoder, const std::vector<Scene>& dataset,
                                    Split split, std::size_t n_anchors, std::uint64_t seed) {
    const std::vector<std::size_t> idx = detail::split_indices(dataset, split);
    if (idx.size() < 3) throw std::invalid_argument("latent_ordering_score: split too small");
    const Matrix emb = embed_scenes(encoder, dataset, idx);

    Rng rng(derive_seed(seed, 0x616e6368ULL));
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t a = 0; a < n_anchors; ++a) {
        const std::size_t anchor = static_cast<std::size_t>(rng.uniform_index(idx.size()));
        std::vector<double> emb_dist, label_dist;
        emb_dist.reserve(idx.size() - 1);
        label_dist.reserve(idx.size() - 1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i == anchor) continue;
            emb_dist.push_back(l2_distance(emb.row(anchor), emb.row(i), emb.cols));
            label_dist.push_back(std::abs(dataset[idx[anchor]].target - dataset[idx[i]].target));
        }
        try {
            total += kendall_tau(emb_dist, label_dist);
            ++used;
        } catch (const std::domain_error&) {
            // fully tied anchor neighborhood; skip
        }
    }
    if (used == 0) throw std::domain_error("latent_ordering_score: no usable anchors");
    return total / static_cast<double>(used);
}

}  // namespace ranklens
