#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ranklens {

/// Base land-cover classes a scene is composed of.
enum class LandCoverClass : std::size_t {
    kWater = 0,
    kVegetation,
    kAgriculture,
    kImperviousSurface,
    kBuildings,
    kOther,
};

inline constexpr std::size_t kClassCount = 6;

inline const char* class_name(LandCoverClass c) {
    switch (c) {
        case LandCoverClass::kWater: return "water";
        case LandCoverClass::kVegetation: return "vegetation";
        case LandCoverClass::kAgriculture: return "agriculture";
        case LandCoverClass::kImperviousSurface: return "impervious_surface";
        case LandCoverClass::kBuildings: return "buildings";
        case LandCoverClass::kOther: return "other";
    }
    return "unknown";
}

/// Per-class area fractions of a scene; always sums to 1.
struct CompositionProfile {
    std::array<double, kClassCount> fractions{};

    double operator[](LandCoverClass c) const {
        return fractions[static_cast<std::size_t>(c)];
    }
    double& operator[](LandCoverClass c) {
        return fractions[static_cast<std::size_t>(c)];
    }

    double sum() const {
        double s = 0.0;
        for (double f : fractions) s += f;
        return s;
    }

    bool valid(double tol = 1e-9) const {
        for (double f : fractions)
            if (!(f >= 0.0 && f <= 1.0 + tol)) return false;
        return std::abs(sum() - 1.0) <= tol;
    }
};

/// The visual concepts probed downstream. The four primitives plus the
/// residential mixes are built from the base classes.
enum class ConceptName : std::size_t {
    kWater = 0,
    kVegetation,
    kAgriculture,
    kImperviousSurface,
    kSparseResidential,
    kMediumResidential,
    kDenseResidential,
};

inline constexpr std::size_t kConceptCount = 7;

inline const char* concept_name(ConceptName c) {
    switch (c) {
        case ConceptName::kWater: return "water";
        case ConceptName::kVegetation: return "vegetation";
        case ConceptName::kAgriculture: return "agriculture";
        case ConceptName::kImperviousSurface: return "impervious_surface";
        case ConceptName::kSparseResidential: return "sparse_residential";
        case ConceptName::kMediumResidential: return "medium_residential";
        case ConceptName::kDenseResidential: return "dense_residential";
    }
    return "unknown";
}

inline ConceptName concept_from_name(const std::string& s) {
    for (std::size_t i = 0; i < kConceptCount; ++i) {
        const ConceptName c = static_cast<ConceptName>(i);
        if (s == concept_name(c)) return c;
    }
    throw std::invalid_argument("unknown concept name: " + s);
}

struct ClassRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Composition bounds defining one concept. Classes with a pinned range are
/// sampled inside it; the optional combined vegetation+agriculture range
/// covers the residential mixes, whose greenery is split between the two.
struct ConceptSpec {
    ConceptName name = ConceptName::kWater;
    std::array<std::optional<ClassRange>, kClassCount> ranges{};
    std::optional<ClassRange> veg_agri_range;

    std::optional<ClassRange>& range(LandCoverClass c) {
        return ranges[static_cast<std::size_t>(c)];
    }
    const std::optional<ClassRange>& range(LandCoverClass c) const {
        return ranges[static_cast<std::size_t>(c)];
    }
};

/// The seven concept definitions: the four primitives and dense residential
/// pin one class to 90-100%, medium residential mixes 40-60% buildings with
/// 40-60% vegetation or agriculture, sparse residential 10-30% buildings with
/// 70-90% vegetation or agriculture.
inline std::array<ConceptSpec, kConceptCount> default_concept_specs() {
    std::array<ConceptSpec, kConceptCount> specs;

    auto pinned = [](ConceptName name, LandCoverClass cls) {
        ConceptSpec s;
        s.name = name;
        s.range(cls) = ClassRange{0.90, 1.00};
        return s;
    };
    specs[0] = pinned(ConceptName::kWater, LandCoverClass::kWater);
    specs[1] = pinned(ConceptName::kVegetation, LandCoverClass::kVegetation);
    specs[2] = pinned(ConceptName::kAgriculture, LandCoverClass::kAgriculture);
    specs[3] = pinned(ConceptName::kImperviousSurface, LandCoverClass::kImperviousSurface);

    ConceptSpec sparse;
    sparse.name = ConceptName::kSparseResidential;
    sparse.range(LandCoverClass::kBuildings) = ClassRange{0.10, 0.30};
    sparse.veg_agri_range = ClassRange{0.70, 0.90};
    specs[4] = sparse;

    ConceptSpec medium;
    medium.name = ConceptName::kMediumResidential;
    medium.range(LandCoverClass::kBuildings) = ClassRange{0.40, 0.60};
    medium.veg_agri_range = ClassRange{0.40, 0.60};
    specs[5] = medium;

    specs[6] = pinned(ConceptName::kDenseResidential, LandCoverClass::kBuildings);
    return specs;
}

inline const ConceptSpec& default_concept_spec(ConceptName name) {
    static const std::array<ConceptSpec, kConceptCount> specs = default_concept_specs();
    for (const ConceptSpec& s : specs)
        if (s.name == name) return s;
    throw std::logic_error("concept spec table incomplete");
}

/// Fixed per-class mean RGB; every pair of classes is separated by at least
/// 0.2 in some channel so the concepts stay visually distinguishable.
inline std::array<double, 3> class_color(LandCoverClass c) {
    switch (c) {
        case LandCoverClass::kWater: return {0.10, 0.25, 0.75};
        case LandCoverClass::kVegetation: return {0.15, 0.60, 0.20};
        case LandCoverClass::kAgriculture: return {0.75, 0.65, 0.30};
        case LandCoverClass::kImperviousSurface: return {0.50, 0.50, 0.55};
        case LandCoverClass::kBuildings: return {0.85, 0.30, 0.25};
        case LandCoverClass::kOther: return {0.40, 0.20, 0.45};
    }
    return {0.0, 0.0, 0.0};
}

inline constexpr double kClassColorStd = 0.05;

}  // namespace ranklens
