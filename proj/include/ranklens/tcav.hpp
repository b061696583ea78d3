#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranklens/cav.hpp"
#include "ranklens/matrix.hpp"
#include "ranklens/mlp.hpp"
#include "ranklens/synth.hpp"

namespace ranklens {

enum class SensitivityMethod { kPlainGradient, kIntegratedGradients };

inline const char* method_name(SensitivityMethod m) {
    return m == SensitivityMethod::kPlainGradient ? "plain" : "ig";
}

inline SensitivityMethod method_from_name(const std::string& s) {
    if (s == "plain") return SensitivityMethod::kPlainGradient;
    if (s == "ig") return SensitivityMethod::kIntegratedGradients;
    throw std::invalid_argument("unknown sensitivity method: " + s);
}

/// One instance's directional-derivative score for one concept.
struct SensitivityRecord {
    std::uint64_t scene_id = 0;
    std::string concept_name;
    std::size_t layer = 0;
    SensitivityMethod method = SensitivityMethod::kPlainGradient;
    double value = 0.0;       // S
    double normalized = std::numeric_limits<double>::quiet_NaN();
    double label = std::numeric_limits<double>::quiet_NaN();
};

/// Fraction of instances with strictly positive sensitivity.
struct TcavScore {
    std::string concept_name;
    std::size_t layer = 0;
    SensitivityMethod method = SensitivityMethod::kPlainGradient;
    double score = 0.0;
    std::size_t n = 0;
};

struct IgConfig {
    std::size_t steps = 50;  // midpoint Riemann rule resolution
    // Baseline is the zero input (the "black image"); its layer activations
    // anchor the integration path.
};

/// Plain conceptual sensitivity: gradient of the head output with respect to
/// the CAV's layer, projected onto the CAV direction.
inline SensitivityRecord sensitivity_plain(const MlpEncoder& encoder, const LinearHead& head,
                                           const Scene& scene, const Cav& cav) {
    if (cav.layer >= encoder.layer_count())
        throw std::invalid_argument("sensitivity_plain: CAV layer not in encoder");
    if (cav.direction.size() != encoder.layer(cav.layer).output_dim())
        throw std::invalid_argument("sensitivity_plain: CAV width mismatch");
    const std::vector<double> g = grad_wrt_layer(encoder, head, scene.grid, cav.layer);
    SensitivityRecord rec;
    rec.scene_id = scene.id;
    rec.concept_name = cav.concept_name;
    rec.layer = cav.layer;
    rec.method = SensitivityMethod::kPlainGradient;
    rec.value = dot(g, cav.direction);
    rec.label = scene.target;
    return rec;
}

/// Integrated gradients in activation space: gradients of the head output are
/// averaged along the straight path from the zero-input baseline's layer
/// activations to the instance's, then scaled elementwise by the
/// displacement. Midpoint rule with ig.steps points.
inline std::vector<double> integrated_gradients_layer(const MlpEncoder& encoder,
                                                      const LinearHead& head, const Scene& scene,
                                                      std::size_t layer, const IgConfig& ig) {
    if (ig.steps < 2) throw std::invalid_argument("integrated_gradients_layer: need >= 2 steps");
    if (layer >= encoder.layer_count())
        throw std::invalid_argument("integrated_gradients_layer: invalid layer");

    const std::vector<double> a =
        forward(encoder, Matrix::from_row(scene.grid)).layer_outputs[layer].row_copy(0);
    const std::vector<double> zero_input(scene.grid.size(), 0.0);
    const std::vector<double> a0 =
        forward(encoder, Matrix::from_row(zero_input)).layer_outputs[layer].row_copy(0);

    const std::size_t width = a.size();
    std::vector<double> grad_sum(width, 0.0);
    std::vector<double> point(width);
    for (std::size_t t = 0; t < ig.steps; ++t) {
        const double alpha =
            (static_cast<double>(t) + 0.5) / static_cast<double>(ig.steps);
        for (std::size_t d = 0; d < width; ++d) point[d] = a0[d] + alpha * (a[d] - a0[d]);
        const std::vector<double> g = grad_from_layer(encoder, head, layer, point);
        for (std::size_t d = 0; d < width; ++d) grad_sum[d] += g[d];
    }
    std::vector<double> attribution(width);
    for (std::size_t d = 0; d < width; ++d)
        attribution[d] = (a[d] - a0[d]) * grad_sum[d] / static_cast<double>(ig.steps);
    return attribution;
}

inline SensitivityRecord sensitivity_ig(const MlpEncoder& encoder, const LinearHead& head,
                                        const Scene& scene, const Cav& cav, const IgConfig& ig) {
    if (cav.layer >= encoder.layer_count())
        throw std::invalid_argument("sensitivity_ig: CAV layer not in encoder");
    if (cav.direction.size() != encoder.layer(cav.layer).output_dim())
        throw std::invalid_argument("sensitivity_ig: CAV width mismatch");
    const std::vector<double> attr =
        integrated_gradients_layer(encoder, head, scene, cav.layer, ig);
    SensitivityRecord rec;
    rec.scene_id = scene.id;
    rec.concept_name = cav.concept_name;
    rec.layer = cav.layer;
    rec.method = SensitivityMethod::kIntegratedGradients;
    rec.value = dot(attr, cav.direction);
    rec.label = scene.target;
    return rec;
}

/// Aggregates records into the score |{S > 0}| / n; zeros are non-positive.
inline TcavScore tcav_score(const std::vector<SensitivityRecord>& records) {
    if (records.empty()) throw std::invalid_argument("tcav_score: no records");
    std::size_t positive = 0;
    for (const SensitivityRecord& r : records)
        if (r.value > 0.0) ++positive;
    TcavScore score;
    score.concept_name = records.front().concept_name;
    score.layer = records.front().layer;
    score.method = records.front().method;
    score.n = records.size();
    score.score = static_cast<double>(positive) / static_cast<double>(records.size());
    return score;
}

/// Pools TCAV scores for one (concept, layer, method) over repeated CAV
/// seeds. Weighting by instance count keeps score * n an exact positive
/// count. Single-draw scoring is the default elsewhere; this is opt-in.
inline TcavScore average_tcav_scores(const std::vector<TcavScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("average_tcav_scores: no scores");
    TcavScore out = scores.front();
    double positives = out.score * static_cast<double>(out.n);
    for (std::size_t i = 1; i < scores.size(); ++i) {
        const TcavScore& s = scores[i];
        if (s.concept_name != out.concept_name || s.layer != out.layer ||
            s.method != out.method)
            throw std::invalid_argument("average_tcav_scores: mixed score groups");
        positives += s.score * static_cast<double>(s.n);
        out.n += s.n;
    }
    out.score = positives / static_cast<double>(out.n);
    return out;
}

/// Signed magnitude normalization onto [-1, 1]: negatives are min-max mapped
/// onto [-1, 0], positives onto [0, 1], each group separately. Exact zeros
/// stay 0; a group whose values are all equal maps to -1 or +1.
inline std::vector<SensitivityRecord> normalize_magnitudes(
    std::vector<SensitivityRecord> records) {
    if (records.empty()) throw std::invalid_argument("normalize_magnitudes: no records");
    double min_neg = std::numeric_limits<double>::infinity();
    double max_neg = -std::numeric_limits<double>::infinity();
    double min_pos = std::numeric_limits<double>::infinity();
    double max_pos = -std::numeric_limits<double>::infinity();
    for (const SensitivityRecord& r : records) {
        if (r.value < 0.0) {
            min_neg = std::min(min_neg, r.value);
            max_neg = std::max(max_neg, r.value);
        } else if (r.value > 0.0) {
            min_pos = std::min(min_pos, r.value);
            max_pos = std::max(max_pos, r.value);
        }
    }
    for (SensitivityRecord& r : records) {
        if (r.value == 0.0) {
            r.normalized = 0.0;
        } else if (r.value < 0.0) {
            const double span = max_neg - min_neg;
            r.normalized = span > 0.0 ? (r.value - max_neg) / span : -1.0;
        } else {
            const double span = max_pos - min_pos;
            r.normalized = span > 0.0 ? (r.value - min_pos) / span : 1.0;
        }
    }
    return records;
}

/// Instance-to-concept assignment by cosine similarity against each CAV,
/// with each concept's similarity column scaled to unit L2 norm before the
/// argmax. Ties go to the earlier concept.
struct AlignmentRecord {
    std::uint64_t scene_id = 0;
    double label = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> cosine_raw;
    std::vector<double> cosine_normalized;
    std::size_t best_concept = 0;  // index into the cav list
};

inline std::vector<AlignmentRecord> align_instances(const Matrix& embeddings,
                                                    const std::vector<std::uint64_t>& ids,
                                                    const std::vector<double>& labels,
                                                    const std::vector<Cav>& cavs) {
    if (cavs.empty()) throw std::invalid_argument("align_instances: no CAVs");
    if (embeddings.rows != ids.size() || embeddings.rows != labels.size())
        throw std::invalid_argument("align_instances: row/id/label count mismatch");
    const std::size_t layer = cavs.front().layer;
    for (const Cav& cav : cavs) {
        if (cav.layer != layer)
            throw std::invalid_argument("align_instances: CAVs from different layers");
        if (cav.direction.size() != embeddings.cols)
            throw std::invalid_argument("align_instances: CAV width != embedding width");
    }

    const std::size_t n = embeddings.rows;
    const std::size_t c_count = cavs.size();
    std::vector<AlignmentRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> e = embeddings.row_copy(i);
        const double norm = l2_norm(e);
        if (!(norm > 0.0))
            throw std::domain_error("align_instances: zero embedding for instance " +
                                    std::to_string(ids[i]));
        records[i].scene_id = ids[i];
        records[i].label = labels[i];
        records[i].cosine_raw.resize(c_count);
        for (std::size_t c = 0; c < c_count; ++c)
            records[i].cosine_raw[c] = dot(e, cavs[c].direction) / norm;
    }
    for (std::size_t c = 0; c < c_count; ++c) {
        double col_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            col_norm += records[i].cosine_raw[c] * records[i].cosine_raw[c];
        col_norm = std::sqrt(col_norm);
        for (std::size_t i = 0; i < n; ++i) {
            records[i].cosine_normalized.resize(c_count);
            records[i].cosine_normalized[c] =
                col_norm > 0.0 ? records[i].cosine_raw[c] / col_norm : 0.0;
        }
    }
    for (AlignmentRecord& rec : records) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < c_count; ++c)
            if (rec.cosine_normalized[c] > rec.cosine_normalized[best]) best = c;
        rec.best_concept = best;
    }
    return records;
}

/// Mean normalized sensitivity per target-label quantile bin.
struct SensitivityBin {
    double label_lo = 0.0;
    double label_hi = 0.0;
    double mean_normalized = 0.0;
    std::size_t count = 0;
};

/// Equal-count label-quantile bin index per record (ranks split evenly).
inline std::vector<std::size_t> label_quantile_bins(const std::vector<SensitivityRecord>& records,
                                                    std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("label_quantile_bins: need >= 2 bins");
    const std::size_t n = records.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].label < records[b].label;
    });
    std::vector<std::size_t> bin_of(n, 0);
    for (std::size_t rank = 0; rank < n; ++rank)
        bin_of[order[rank]] = rank * bins / n;
    return bin_of;
}

/// Per-bin mean of already-normalized sensitivities. Bins left empty by the
/// quantile assignment keep count 0.
inline std::vector<SensitivityBin> profile_from_records(
    const std::vector<SensitivityRecord>& records, std::size_t bins) {
    if (records.empty()) throw std::invalid_argument("profile_from_records: no records");
    const std::vector<std::size_t> bin_of = label_quantile_bins(records, bins);
    std::vector<SensitivityBin> out(bins);
    for (SensitivityBin& b : out) {
        b.label_lo = std::numeric_limits<double>::infinity();
        b.label_hi = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        SensitivityBin& b = out[bin_of[i]];
        b.count += 1;
        b.mean_normalized += records[i].normalized;
        b.label_lo = std::min(b.label_lo, records[i].label);
        b.label_hi = std::max(b.label_hi, records[i].label);
    }
    for (SensitivityBin& b : out) {
        if (b.count == 0) {
            b.label_lo = b.label_hi = 0.0;
        } else {
            b.mean_normalized /= static_cast<double>(b.count);
        }
    }
    return out;
}

/// Buckets a split's instances into label-quantile bins and reports the mean
/// normalized sensitivity per bin. Bins with no instances keep count 0.
inline std::vector<SensitivityBin> sensitivity_profile(const MlpEncoder& encoder,
                                                       const LinearHead& head,
                                                       const std::vector<Scene>& dataset,
                                                       Split split, const Cav& cav,
                                                       SensitivityMethod method,
                                                       std::size_t bins,
                                                       const IgConfig& ig = {}) {
    if (bins < 2) throw std::invalid_argument("sensitivity_profile: need >= 2 bins");
    std::vector<const Scene*> scenes;
    for (const Scene& s : dataset)
        if (s.split == split) scenes.push_back(&s);
    if (scenes.empty()) throw std::invalid_argument("sensitivity_profile: empty split");

    std::vector<SensitivityRecord> records;
    records.reserve(scenes.size());
    for (const Scene* s : scenes)
        records.push_back(method == SensitivityMethod::kPlainGradient
                              ? sensitivity_plain(encoder, head, *s, cav)
                              : sensitivity_ig(encoder, head, *s, cav, ig));
    return profile_from_records(normalize_magnitudes(std::move(records)), bins);
}

}  // namespace ranklens
