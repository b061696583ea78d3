#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranklens/matrix.hpp"
#include "ranklens/mlp.hpp"
#include "ranklens/rng.hpp"
#include "ranklens/synth.hpp"

namespace ranklens {

/// Activations of one scene set at one encoder layer, one row per scene.
struct ConceptActivations {
    std::string concept_name;
    std::size_t layer = 0;
    Matrix activations;
    std::vector<std::uint64_t> scene_ids;
    bool shortfall = false;  // set when a negative pool could not fill the request
};

/// A concept direction in one layer's activation space: the unit normal of a
/// linear classifier's hyperplane, oriented so concept examples score higher.
struct Cav {
    std::string concept_name;
    std::size_t layer = 0;
    std::vector<double> direction;  // unit norm
    double bias = 0.0;              // classifier bias in the normalized scale
    double holdout_accuracy = 0.0;
    std::uint64_t seed = 0;
    bool negative_shortfall = false;
};

enum class CavLoss { kHinge, kLogistic };

struct CavTrainConfig {
    double holdout_fraction = 0.2;
    double lambda = 1e-3;  // L2 regularization
    std::size_t epochs = 200;
    CavLoss loss = CavLoss::kHinge;
};

inline ConceptActivations collect_activations(const MlpEncoder& encoder,
                                              const std::vector<Scene>& scenes,
                                              std::size_t layer,
                                              const std::string& concept_label = "") {
    if (layer >= encoder.layer_count())
        throw std::invalid_argument("collect_activations: invalid layer");
    if (scenes.empty()) throw std::invalid_argument("collect_activations: no scenes");

    Matrix batch(scenes.size(), scenes[0].feature_dim());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (scenes[i].feature_dim() != batch.cols)
            throw std::invalid_argument("collect_activations: inconsistent scene dims");
        std::copy(scenes[i].grid.begin(), scenes[i].grid.end(), batch.row(i));
    }
    ConceptActivations out;
    out.concept_name = concept_label;
    out.layer = layer;
    out.activations = forward(encoder, batch).layer_outputs[layer];
    out.scene_ids.reserve(scenes.size());
    for (const Scene& s : scenes) out.scene_ids.push_back(s.id);
    return out;
}

/// Uniform sample without replacement from the union of every other
/// concept's activations. If the pool is smaller than n the whole pool is
/// returned and the shortfall flag set.
inline ConceptActivations sample_negatives(const std::vector<ConceptActivations>& all_concepts,
                                           const std::string& target_concept, std::size_t n,
                                           std::uint64_t seed) {
    std::size_t width = 0;
    std::size_t layer = 0;
    std::vector<std::pair<const ConceptActivations*, std::size_t>> pool;  // (set, row)
    bool first = true;
    for (const ConceptActivations& ca : all_concepts) {
        if (ca.concept_name == target_concept) continue;
        if (first) {
            width = ca.activations.cols;
            layer = ca.layer;
            first = false;
        } else if (ca.activations.cols != width || ca.layer != layer) {
            throw std::invalid_argument("sample_negatives: mixed layers in pool");
        }
        for (std::size_t r = 0; r < ca.activations.rows; ++r) pool.emplace_back(&ca, r);
    }
    if (pool.empty()) throw std::invalid_argument("sample_negatives: empty pool");

    ConceptActivations out;
    out.concept_name = "negatives(" + target_concept + ")";
    out.layer = layer;
    out.shortfall = pool.size() < n;
    const std::size_t take = std::min(n, pool.size());

    Rng rng(derive_seed(seed, 0x6e656773ULL));
    const std::vector<std::size_t> chosen = rng.sample_without_replacement(pool.size(), take);
    out.activations = Matrix(take, width);
    out.scene_ids.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto& [set, row] = pool[chosen[i]];
        std::copy(set->activations.row(row), set->activations.row(row) + width,
                  out.activations.row(i));
        out.scene_ids.push_back(set->scene_ids[row]);
    }
    return out;
}

namespace detail {

struct CavSplit {
    std::vector<std::size_t> train_pos, train_neg, hold_pos, hold_neg;
};

/// Holdout rows for each class. The permutation for a class depends only on
/// (seed, class size), so swapping the positive/negative roles of two sets
/// leaves each set's own split unchanged.
inline CavSplit cav_holdout_split(std::size_t n_pos, std::size_t n_neg, double fraction,
                                  std::uint64_t seed) {
    auto split_one = [&](std::size_t n, std::vector<std::size_t>& train,
                         std::vector<std::size_t>& hold) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        Rng rng(derive_seed(derive_seed(seed, 0x686f6c64ULL), n));
        rng.shuffle(idx);
        const std::size_t n_hold =
            static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
        hold.assign(idx.begin(), idx.begin() + n_hold);
        train.assign(idx.begin() + n_hold, idx.end());
    };
    CavSplit s;
    split_one(n_pos, s.train_pos, s.hold_pos);
    split_one(n_neg, s.train_neg, s.hold_neg);
    return s;
}

}  // namespace detail

/// Max-margin linear classifier between concept activations (label +1) and
/// negatives (label -1), trained by deterministic full-batch subgradient
/// descent with a 1/(lambda t) step schedule and an L2 ball projection. The
/// CAV is the unit-normalized hyperplane normal, oriented toward the concept;
/// accuracy is measured on the held-out fraction of each class.
inline Cav train_cav(const ConceptActivations& positives, const ConceptActivations& negatives,
                     const CavTrainConfig& config, std::uint64_t seed) {
    if (positives.activations.cols != negatives.activations.cols)
        throw std::invalid_argument("train_cav: activation widths differ");
    if (positives.layer != negatives.layer)
        throw std::invalid_argument("train_cav: layers differ");
    if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0))
        throw std::invalid_argument("train_cav: holdout fraction must be in (0, 1)");
    if (!(config.lambda > 0.0) || config.epochs == 0)
        throw std::invalid_argument("train_cav: invalid training parameters");

    const detail::CavSplit split = detail::cav_holdout_split(
        positives.activations.rows, negatives.activations.rows, config.holdout_fraction, seed);
    if (split.train_pos.size() < 10 || split.train_neg.size() < 10)
        throw std::invalid_argument("train_cav: fewer than 10 training rows in a class");

    const std::size_t dim = positives.activations.cols;
    const std::size_t n_train = split.train_pos.size() + split.train_neg.size();
    // Rows are gathered into (x, y) with the bias handled as an extra
    // always-one feature, regularized along with the weights. Activations are
    // centered on the training mean, which makes the learned direction exactly
    // invariant under a common translation of all activations.
    Matrix x(n_train, dim + 1);
    std::vector<double> y(n_train);
    std::size_t r = 0;
    for (std::size_t i : split.train_pos) {
        std::copy(positives.activations.row(i), positives.activations.row(i) + dim, x.row(r));
        x(r, dim) = 1.0;
        y[r++] = 1.0;
    }
    for (std::size_t i : split.train_neg) {
        std::copy(negatives.activations.row(i), negatives.activations.row(i) + dim, x.row(r));
        x(r, dim) = 1.0;
        y[r++] = -1.0;
    }
    std::vector<double> center(dim, 0.0);
    for (std::size_t m = 0; m < n_train; ++m)
        for (std::size_t d = 0; d < dim; ++d) center[d] += x(m, d);
    for (std::size_t d = 0; d < dim; ++d) center[d] /= static_cast<double>(n_train);
    for (std::size_t m = 0; m < n_train; ++m)
        for (std::size_t d = 0; d < dim; ++d) x(m, d) -= center[d];

    std::vector<double> w(dim + 1, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n_train);
    const double radius = 1.0 / std::sqrt(config.lambda);
    for (std::size_t t = 1; t <= config.epochs; ++t) {
        std::vector<double> grad(dim + 1, 0.0);
        for (std::size_t m = 0; m < n_train; ++m) {
            const double* xm = x.row(m);
            double score = 0.0;
            for (std::size_t d = 0; d <= dim; ++d) score += w[d] * xm[d];
            if (config.loss == CavLoss::kHinge) {
                if (y[m] * score < 1.0)
                    for (std::size_t d = 0; d <= dim; ++d) grad[d] -= y[m] * xm[d] * inv_n;
            } else {
                const double z = -y[m] * score;
                const double sig = 1.0 / (1.0 + std::exp(-z));
                for (std::size_t d = 0; d <= dim; ++d) grad[d] -= y[m] * xm[d] * sig * inv_n;
            }
        }
        const double eta = 1.0 / (config.lambda * static_cast<double>(t));
        for (std::size_t d = 0; d <= dim; ++d)
            w[d] = w[d] * (1.0 - eta * config.lambda) - eta * grad[d];
        const double norm = l2_norm(w);
        if (norm > radius)
            for (double& v : w) v *= radius / norm;
    }

    // Orient toward the concept: positives must score higher on average.
    double pos_mean = 0.0, neg_mean = 0.0;
    for (std::size_t m = 0; m < n_train; ++m) {
        const double* xm = x.row(m);
        double s = 0.0;
        for (std::size_t d = 0; d <= dim; ++d) s += w[d] * xm[d];
        if (y[m] > 0.0)
            pos_mean += s / static_cast<double>(split.train_pos.size());
        else
            neg_mean += s / static_cast<double>(split.train_neg.size());
    }
    if (pos_mean < neg_mean)
        for (double& v : w) v = -v;

    double wnorm = 0.0;
    for (std::size_t d = 0; d < dim; ++d) wnorm += w[d] * w[d];
    wnorm = std::sqrt(wnorm);
    if (!(wnorm > 0.0)) throw std::domain_error("train_cav: degenerate zero classifier");

    Cav cav;
    cav.concept_name = positives.concept_name;
    cav.layer = positives.layer;
    cav.seed = seed;
    cav.negative_shortfall = negatives.shortfall;
    cav.direction.resize(dim);
    double w_dot_center = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        cav.direction[d] = w[d] / wnorm;
        w_dot_center += w[d] * center[d];
    }
    cav.bias = (w[dim] - w_dot_center) / wnorm;  // bias in raw activation space

    std::size_t correct = 0, total = 0;
    auto score_row = [&](const double* xm) {
        double s = cav.bias;
        for (std::size_t d = 0; d < dim; ++d) s += cav.direction[d] * xm[d];
        return s;
    };
    for (std::size_t i : split.hold_pos) {
        if (score_row(positives.activations.row(i)) > 0.0) ++correct;
        ++total;
    }
    for (std::size_t i : split.hold_neg) {
        if (score_row(negatives.activations.row(i)) <= 0.0) ++correct;
        ++total;
    }
    if (total == 0) throw std::invalid_argument("train_cav: empty holdout");
    cav.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return cav;
}

/// One CAV per (concept, layer): positives are the concept's activations,
/// negatives a fresh sample from all other concepts.
inline std::vector<Cav> train_all_cavs(const MlpEncoder& encoder,
                                       const std::vector<std::vector<Scene>>& concept_sets,
                                       const std::vector<std::string>& concept_names,
                                       const std::vector<std::size_t>& layers,
                                       std::size_t n_negatives, const CavTrainConfig& config,
                                       std::uint64_t seed) {
    if (concept_sets.size() != concept_names.size() || concept_sets.size() < 2)
        throw std::invalid_argument("train_all_cavs: need at least 2 named concept sets");
    std::vector<Cav> cavs;
    for (std::size_t layer : layers) {
        std::vector<ConceptActivations> acts;
        acts.reserve(concept_sets.size());
        for (std::size_t c = 0; c < concept_sets.size(); ++c)
            acts.push_back(
                collect_activations(encoder, concept_sets[c], layer, concept_names[c]));
        for (std::size_t c = 0; c < concept_sets.size(); ++c) {
            const std::uint64_t job_seed = derive_seed(seed, layer, c);
            const ConceptActivations negs =
                sample_negatives(acts, concept_names[c], n_negatives, job_seed);
            cavs.push_back(train_cav(acts[c], negs, config, job_seed));
        }
    }
    return cavs;
}

/// Holdout accuracy per (concept, layer), laid out concept-major.
struct ConceptAccuracyTable {
    std::vector<std::string> concepts;
    std::vector<std::size_t> layers;
    std::vector<double> accuracy;  // concepts.size() * layers.size()

    double at(std::size_t concept_idx, std::size_t layer_idx) const {
        return accuracy[concept_idx * layers.size() + layer_idx];
    }
};

inline ConceptAccuracyTable concept_accuracy_by_layer(const std::vector<Cav>& cavs) {
    ConceptAccuracyTable table;
    for (const Cav& cav : cavs) {
        if (std::find(table.concepts.begin(), table.concepts.end(), cav.concept_name) ==
            table.concepts.end())
            table.concepts.push_back(cav.concept_name);
        if (std::find(table.layers.begin(), table.layers.end(), cav.layer) == table.layers.end())
            table.layers.push_back(cav.layer);
    }
    std::sort(table.layers.begin(), table.layers.end());
    table.accuracy.assign(table.concepts.size() * table.layers.size(), 0.0);
    for (const Cav& cav : cavs) {
        const std::size_t ci =
            std::find(table.concepts.begin(), table.concepts.end(), cav.concept_name) -
            table.concepts.begin();
        const std::size_t li =
            std::find(table.layers.begin(), table.layers.end(), cav.layer) - table.layers.begin();
        table.accuracy[ci * table.layers.size() + li] = cav.holdout_accuracy;
    }
    return table;
}

inline ConceptAccuracyTable concept_accuracy_by_layer(
    const MlpEncoder& encoder, const std::vector<std::vector<Scene>>& concept_sets,
    const std::vector<std::string>& concept_names, const std::vector<std::size_t>& layers,
    std::size_t n_negatives, const CavTrainConfig& config, std::uint64_t seed) {
    return concept_accuracy_by_layer(train_all_cavs(encoder, concept_sets, concept_names, layers,
                                                    n_negatives, config, seed));
}

}  // namespace ranklens
