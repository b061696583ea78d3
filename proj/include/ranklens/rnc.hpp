#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ranklens/matrix.hpp"

namespace ranklens {

// Closed enumerations: only the combination used by the method is supported.
enum class LabelDistance { kL1 };
enum class FeatureSimilarity { kNegativeL2 };

struct RncConfig {
    double temperature = 2.0;
    LabelDistance label_distance = LabelDistance::kL1;
    FeatureSimilarity feature_similarity = FeatureSimilarity::kNegativeL2;
};

/// A batch of embeddings with their regression labels.
struct RncBatch {
    Matrix embeddings;           // M x embedding_dim
    std::vector<double> labels;  // M
};

struct RncLossOutput {
    double value = 0.0;
    Matrix grad;  // M x embedding_dim, d value / d embeddings
};

/// Candidate set S_{i,j}: indices k != i whose label distance from i is at
/// least that of j. Always contains j itself. Returned sorted ascending.
inline std::vector<std::size_t> candidate_set(std::size_t i, std::size_t j,
                                              const std::vector<double>& labels) {
    if (i == j) throw std::invalid_argument("candidate_set: i == j");
    if (i >= labels.size() || j >= labels.size())
        throw std::invalid_argument("candidate_set: index out of range");
    const double dij = std::abs(labels[i] - labels[j]);
    std::vector<std::size_t> s;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (k == i) continue;
        if (std::abs(labels[i] - labels[k]) >= dij) s.push_back(k);
    }
    return s;
}

/// Batch loss: for every ordered anchor/pair (i, j), the pair's similarity is
/// contrasted against every candidate at least as label-distant, and the
/// negative log-softmax terms are averaged over all M(M-1) pairings.
/// Similarity is the negative L2 distance between embeddings; label distance
/// is L1. Each denominator is stabilized by subtracting its max exponent.
/// Also returns the exact analytic gradient with respect to every embedding.
inline RncLossOutput rnc_loss(const RncBatch& batch, const RncConfig& config = {}) {
    const std::size_t m = batch.labels.size();
    const std::size_t dim = batch.embeddings.cols;
    if (m < 2) throw std::invalid_argument("rnc_loss: batch needs at least 2 samples");
    if (batch.embeddings.rows != m)
        throw std::invalid_argument("rnc_loss: embeddings rows != label count");
    if (!batch.embeddings.is_finite() || !all_finite(batch.labels))
        throw std::invalid_argument("rnc_loss: non-finite inputs");
    if (!(config.temperature > 0.0))
        throw std::invalid_argument("rnc_loss: temperature must be positive");

    const double inv_tau = 1.0 / config.temperature;
    const double pair_weight = 1.0 / (static_cast<double>(m) * static_cast<double>(m - 1));

    RncLossOutput out;
    out.grad = Matrix(m, dim);

    std::vector<double> sims(m);        // s_ik / tau for the current anchor
    std::vector<double> ldist(m);       // |y_i - y_k|
    std::vector<double> sim_coeff(m);   // d value / d (s_ik / tau), current anchor

    double value = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* vi = batch.embeddings.row(i);
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            sims[k] = -l2_distance(vi, batch.embeddings.row(k), dim) * inv_tau;
            ldist[k] = std::abs(batch.labels[i] - batch.labels[k]);
        }
        std::fill(sim_coeff.begin(), sim_coeff.end(), 0.0);

        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double dij = ldist[j];
            double max_exp = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < m; ++k) {
                if (k == i || ldist[k] < dij) continue;
                if (sims[k] > max_exp) max_exp = sims[k];
            }
            double z = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                if (k == i || ldist[k] < dij) continue;
                z += std::exp(sims[k] - max_exp);
            }
            value += pair_weight * (max_exp + std::log(z) - sims[j]);

            const double inv_z = 1.0 / z;
            for (std::size_t k = 0; k < m; ++k) {
                if (k == i || ldist[k] < dij) continue;
                sim_coeff[k] += std::exp(sims[k] - max_exp) * inv_z;
            }
            sim_coeff[j] -= 1.0;
        }

        // Chain through s_ik = -||v_i - v_k|| / tau.
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            const double c = sim_coeff[k] * pair_weight * inv_tau;
            if (c == 0.0) continue;
            const double* vk = batch.embeddings.row(k);
            const double dist = l2_distance(vi, vk, dim);
            if (dist <= 0.0) continue;  // subgradient 0 at coincident embeddings
            const double scale = c / dist;
            double* gi = out.grad.row(i);
            double* gk = out.grad.row(k);
            for (std::size_t d = 0; d < dim; ++d) {
                const double u = (vk[d] - vi[d]) * scale;
                gi[d] += u;
                gk[d] -= u;
            }
        }
    }

    out.value = value;
    return out;
}

}  // namespace ranklens
