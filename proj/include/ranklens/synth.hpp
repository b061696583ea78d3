#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <string>

#include "ranklens/landcover.hpp"
#include "ranklens/rng.hpp"

namespace ranklens {

enum class Split { kUnassigned = 0, kTrain, kVal, kTest };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
        case Split::kUnassigned: return "unassigned";
    }
    return "unassigned";
}

inline Split split_from_name(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "val") return Split::kVal;
    if (s == "test") return Split::kTest;
    if (s == "unassigned") return Split::kUnassigned;
    throw std::invalid_argument("unknown split name: " + s);
}

/// A synthetic raster patch: H x W cells, 3 channels per cell, flattened
/// row-major as (row * W + col) * 3 + channel. Values are min-max normalized
/// to [0, 1] per scene. Concept scenes carry no target (NaN).
struct Scene {
    std::uint64_t id = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> grid;
    std::vector<std::uint8_t> cell_classes;  // per-cell LandCoverClass index
    CompositionProfile composition;
    double target = std::numeric_limits<double>::quiet_NaN();
    Split split = Split::kUnassigned;

    std::size_t feature_dim() const { return height * width * 3; }
};

/// Synthetic stand-in for the real outcome labels: a linear score over the
/// composition, an optional saturating vegetation term, plus Gaussian noise.
/// The weight signs double as the concept-direction oracle for the tests.
struct GroundTruthModel {
    std::array<double, kClassCount> weights{};
    double noise_std = 0.05;
    bool nonlinear = false;

    static GroundTruthModel defaults() {
        GroundTruthModel m;
        m.weights[static_cast<std::size_t>(LandCoverClass::kWater)] = 0.5;
        m.weights[static_cast<std::size_t>(LandCoverClass::kVegetation)] = 1.0;
        m.weights[static_cast<std::size_t>(LandCoverClass::kAgriculture)] = 0.2;
        m.weights[static_cast<std::size_t>(LandCoverClass::kImperviousSurface)] = -0.8;
        m.weights[static_cast<std::size_t>(LandCoverClass::kBuildings)] = -0.3;
        m.weights[static_cast<std::size_t>(LandCoverClass::kOther)] = 0.0;
        m.noise_std = 0.05;
        return m;
    }
};

namespace detail {

/// Integer apportionment by largest remainder; the result sums to `total`
/// exactly. Ties go to the earlier entry.
inline std::vector<std::size_t> largest_remainder(const std::vector<double>& targets,
                                                  std::size_t total) {
    const std::size_t k = targets.size();
    std::vector<std::size_t> counts(k, 0);
    std::vector<double> frac(k, 0.0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double t = std::max(0.0, targets[i]);
        counts[i] = static_cast<std::size_t>(std::floor(t + 1e-9));
        frac[i] = t - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    if (assigned > total) {  // fp slop; trim from the smallest remainders up
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return frac[a] < frac[b]; });
        for (std::size_t i = 0; assigned > total && i < k; ++i) {
            const std::size_t j = order[i];
            const std::size_t trim = std::min(counts[j], assigned - total);
            counts[j] -= trim;
            assigned -= trim;
        }
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    std::size_t cursor = 0;
    while (assigned < total) {
        counts[order[cursor % k]] += 1;
        ++assigned;
        ++cursor;
    }
    return counts;
}

}  // namespace detail

/// Draws a composition inside the spec's bounds. Pinned classes are sampled
/// sequentially within whatever mass the remaining constraints leave; the
/// combined vegetation+agriculture range is split randomly between the two
/// classes; leftover mass goes to the unconstrained classes by a uniform
/// simplex draw. The result sums to 1 exactly up to rounding.
inline CompositionProfile sample_profile(const ConceptSpec& spec, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x70726f66ULL));

    constexpr double kTol = 1e-12;
    const std::size_t veg = static_cast<std::size_t>(LandCoverClass::kVegetation);
    const std::size_t agr = static_cast<std::size_t>(LandCoverClass::kAgriculture);
    if (spec.veg_agri_range && (spec.ranges[veg] || spec.ranges[agr]))
        throw std::invalid_argument(
            "sample_profile: combined veg+agri range conflicts with per-class pins");

    double min_unsampled = spec.veg_agri_range ? spec.veg_agri_range->lo : 0.0;
    for (const auto& r : spec.ranges) {
        if (!r) continue;
        if (r->lo > r->hi || r->lo < 0.0 || r->hi > 1.0)
            throw std::invalid_argument("sample_profile: malformed class range");
        min_unsampled += r->lo;
    }
    if (min_unsampled > 1.0 + kTol)
        throw std::invalid_argument("sample_profile: infeasible ranges (lower bounds exceed 1)");

    CompositionProfile profile;
    double allocated = 0.0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (!spec.ranges[c]) continue;
        const ClassRange& r = *spec.ranges[c];
        min_unsampled -= r.lo;
        const double hi = std::min(r.hi, 1.0 - allocated - min_unsampled);
        if (hi < r.lo - kTol)
            throw std::invalid_argument("sample_profile: infeasible ranges");
        const double x = rng.uniform(r.lo, std::max(r.lo, hi));
        profile.fractions[c] = x;
        allocated += x;
    }
    if (spec.veg_agri_range) {
        const ClassRange& r = *spec.veg_agri_range;
        min_unsampled -= r.lo;
        const double hi = std::min(r.hi, 1.0 - allocated);
        if (hi < r.lo - kTol)
            throw std::invalid_argument("sample_profile: infeasible combined range");
        const double total = rng.uniform(r.lo, std::max(r.lo, hi));
        const double share = rng.uniform();
        profile.fractions[veg] = share * total;
        profile.fractions[agr] = (1.0 - share) * total;
        allocated += total;
    }

    const double remainder = std::max(0.0, 1.0 - allocated);
    std::array<double, kClassCount> simplex{};
    double simplex_sum = 0.0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (spec.ranges[c]) continue;
        if (spec.veg_agri_range && (c == veg || c == agr)) continue;
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        simplex[c] = -std::log(u);
        simplex_sum += simplex[c];
    }
    if (simplex_sum > 0.0) {
        for (std::size_t c = 0; c < kClassCount; ++c)
            profile.fractions[c] += remainder * simplex[c] / simplex_sum;
    }
    if (!profile.valid(1e-9))
        throw std::logic_error("sample_profile: produced invalid composition");
    return profile;
}

/// Uniform (Dirichlet-1) composition over all classes.
inline CompositionProfile random_profile(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x73696d70ULL));
    CompositionProfile p;
    double sum = 0.0;
    for (double& f : p.fractions) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        f = -std::log(u);
        sum += f;
    }
    for (double& f : p.fractions) f /= sum;
    return p;
}

/// Renders a composition into a grid. Cell counts follow the profile to
/// within one cell: the dominant class is rounded up, the rest apportioned by
/// largest remainder. Cell colors are the class mean plus Gaussian noise,
/// then the whole scene is min-max normalized to [0, 1].
inline Scene render_scene(const CompositionProfile& profile, std::uint64_t seed,
                          std::size_t height = 8, std::size_t width = 8) {
    if (height < 4 || width < 4)
        throw std::invalid_argument("render_scene: grid too small (need at least 4x4)");
    if (!profile.valid(1e-9))
        throw std::invalid_argument("render_scene: invalid composition profile");

    Rng rng(derive_seed(seed, 0x7363656eULL));
    const std::size_t n_cells = height * width;

    std::size_t dominant = 0;
    for (std::size_t c = 1; c < kClassCount; ++c)
        if (profile.fractions[c] > profile.fractions[dominant]) dominant = c;

    std::array<std::size_t, kClassCount> counts{};
    const double dom_target = profile.fractions[dominant] * static_cast<double>(n_cells);
    counts[dominant] =
        std::min(n_cells, static_cast<std::size_t>(std::ceil(dom_target - 1e-9)));

    std::vector<double> rest_targets;
    std::vector<std::size_t> rest_classes;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (c == dominant) continue;
        rest_classes.push_back(c);
        rest_targets.push_back(profile.fractions[c] * static_cast<double>(n_cells));
    }
    const std::vector<std::size_t> rest_counts =
        detail::largest_remainder(rest_targets, n_cells - counts[dominant]);
    for (std::size_t i = 0; i < rest_classes.size(); ++i)
        counts[rest_classes[i]] = rest_counts[i];

    Scene scene;
    scene.height = height;
    scene.width = width;
    scene.composition = profile;
    scene.cell_classes.reserve(n_cells);
    for (std::size_t c = 0; c < kClassCount; ++c)
        scene.cell_classes.insert(scene.cell_classes.end(), counts[c],
                                  static_cast<std::uint8_t>(c));
    rng.shuffle(scene.cell_classes);

    scene.grid.resize(n_cells * 3);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        const std::array<double, 3> mean =
            class_color(static_cast<LandCoverClass>(scene.cell_classes[cell]));
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double v = mean[ch] + kClassColorStd * rng.gaussian();
            scene.grid[cell * 3 + ch] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double range = hi - lo;
    for (double& v : scene.grid) v = range > 0.0 ? (v - lo) / range : 0.0;
    return scene;
}

/// Deterministic noisy score for one composition.
inline double ground_truth_score(const GroundTruthModel& model, const CompositionProfile& profile,
                                 std::uint64_t seed) {
    double score = 0.0;
    for (std::size_t c = 0; c < kClassCount; ++c)
        score += model.weights[c] * profile.fractions[c];
    if (model.nonlinear)
        score += 0.5 * std::tanh(3.0 * profile[LandCoverClass::kVegetation]);
    if (model.noise_std > 0.0) {
        Rng rng(derive_seed(seed, 0x6e6f6973ULL));
        score += model.noise_std * rng.gaussian();
    }
    return score;
}

/// Builds the regression task: profiles drawn from a mixture over the seven
/// concept specs plus fully random compositions, rendered and labeled.
/// Every scene's stream is derived from (seed, id), so regeneration of any
/// subset is reproducible.
inline std::vector<Scene> build_task_dataset(std::size_t n, const GroundTruthModel& model,
                                             std::uint64_t seed, std::size_t height = 8,
                                             std::size_t width = 8) {
    if (n < 100)
        throw std::invalid_argument("build_task_dataset: need at least 100 scenes");
    const std::array<ConceptSpec, kConceptCount> specs = default_concept_specs();
    std::vector<Scene> scenes;
    scenes.reserve(n);
    for (std::uint64_t id = 0; id < n; ++id) {
        const std::uint64_t scene_seed = derive_seed(seed, id);
        Rng pick(derive_seed(scene_seed, 0));
        const std::uint64_t generator = pick.uniform_index(kConceptCount + 1);
        const CompositionProfile profile =
            generator < kConceptCount
                ? sample_profile(specs[generator], derive_seed(scene_seed, 1))
                : random_profile(derive_seed(scene_seed, 1));
        Scene scene = render_scene(profile, derive_seed(scene_seed, 2), height, width);
        scene.id = id;
        scene.target = ground_truth_score(model, profile, derive_seed(scene_seed, 3));
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

/// Tags every scene with train/val/test. Scenes are binned into
/// `quantile_count` equal-count target quantiles and split independently
/// inside each bin with largest-remainder rounding, so all three splits see
/// the full outcome range.
inline std::vector<Scene> stratified_split(std::vector<Scene> dataset,
                                           std::size_t quantile_count = 5,
                                           const std::array<double, 3>& fractions = {0.64, 0.16,
                                                                                     0.20},
                                           std::uint64_t seed = 0) {
    const std::size_t n = dataset.size();
    if (quantile_count < 1) throw std::invalid_argument("stratified_split: need >= 1 quantile");
    if (n < quantile_count * 5)
        throw std::invalid_argument("stratified_split: dataset too small for stratification");
    const double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9)
        throw std::invalid_argument("stratified_split: fractions must sum to 1");
    for (double f : fractions)
        if (f < 0.0) throw std::invalid_argument("stratified_split: negative fraction");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dataset[a].target != dataset[b].target) return dataset[a].target < dataset[b].target;
        return dataset[a].id < dataset[b].id;
    });

    for (std::size_t b = 0; b < quantile_count; ++b) {
        const std::size_t begin = b * n / quantile_count;
        const std::size_t end = (b + 1) * n / quantile_count;
        std::vector<std::size_t> bin(order.begin() + begin, order.begin() + end);
        Rng rng(derive_seed(seed, 0x73706c69ULL + b));
        rng.shuffle(bin);
        const double bn = static_cast<double>(bin.size());
        const std::vector<std::size_t> counts = detail::largest_remainder(
            {fractions[0] * bn, fractions[1] * bn, fractions[2] * bn}, bin.size());
        std::size_t cursor = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            const Split tag = (s == 0) ? Split::kTrain : (s == 1) ? Split::kVal : Split::kTest;
            for (std::size_t i = 0; i < counts[s]; ++i) dataset[bin[cursor++]].split = tag;
        }
    }
    return dataset;
}

/// n scenes sampled inside one concept's composition bounds; no targets.
inline std::vector<Scene> build_concept_set(const ConceptSpec& spec, std::size_t n,
                                            std::uint64_t seed, std::size_t height = 8,
                                            std::size_t width = 8) {
    if (n < 10) throw std::invalid_argument("build_concept_set: need at least 10 scenes");
    std::vector<Scene> scenes;
    scenes.reserve(n);
    for (std::uint64_t id = 0; id < n; ++id) {
        const std::uint64_t scene_seed =
            derive_seed(derive_seed(seed, static_cast<std::uint64_t>(spec.name)), id);
        const CompositionProfile profile = sample_profile(spec, derive_seed(scene_seed, 1));
        Scene scene = render_scene(profile, derive_seed(scene_seed, 2), height, width);
        scene.id = id;
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

}  // namespace ranklens
