#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranklens/cav.hpp"
#include "ranklens/landcover.hpp"
#include "ranklens/metrics.hpp"
#include "ranklens/mlp.hpp"
#include "ranklens/pca.hpp"
#include "ranklens/synth.hpp"
#include "ranklens/tcav.hpp"
#include "ranklens/train.hpp"

// Persistence layer. Every artifact starts with a schema version: CSV files
// carry a "# schema:" first line, JSON documents a "_schema" field (first key
// when serialized), and the binary grid file a magic string. Doubles in CSV
// are printed with %.17g so reruns are byte-identical and values round-trip.

namespace ranklens::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr char kDatasetSchema[] = "ranklens/dataset-manifest/v1";
inline constexpr char kConceptSchema[] = "ranklens/concept-set/v1";
inline constexpr char kCheckpointSchema[] = "ranklens/checkpoint/v1";
inline constexpr char kMetricsSchema[] = "ranklens/metrics/v1";
inline constexpr char kCavsSchema[] = "ranklens/cavs/v1";
inline constexpr char kTcavSchema[] = "ranklens/tcav-summary/v1";
inline constexpr char kGridMagic[] = "RLGRIDS1";  // 8 bytes, followed by u32 dims

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// CSV emitter: schema comment line, then a header row, then rows.
class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::string& schema,
              const std::vector<std::string>& columns) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
        out_ << "# schema: " << schema << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    CsvWriter& field(const std::string& s) {
        if (!first_) out_ << ",";
        out_ << s;
        first_ = false;
        return *this;
    }
    CsvWriter& field(double v) { return field(format_double(v)); }
    CsvWriter& field(unsigned long v) { return field(std::to_string(v)); }
    CsvWriter& field(unsigned long long v) { return field(std::to_string(v)); }
    CsvWriter& field(unsigned v) { return field(std::to_string(v)); }
    void end_row() {
        out_ << "\n";
        first_ = true;
    }

private:
    std::ofstream out_;
    bool first_ = true;
};

namespace detail {

inline std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0xFF000000u) >> 24) | ((v & 0x00FF0000u) >> 8) | ((v & 0x0000FF00u) << 8) |
           ((v & 0x000000FFu) << 24);
}

inline std::uint64_t bswap64(std::uint64_t v) {
    return (static_cast<std::uint64_t>(bswap32(static_cast<std::uint32_t>(v))) << 32) |
           bswap32(static_cast<std::uint32_t>(v >> 32));
}

inline void write_u32(std::ofstream& out, std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) v = bswap32(v);
    out.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if constexpr (std::endian::native == std::endian::big) v = bswap32(v);
    return v;
}

inline void write_f64_block(std::ofstream& out, const std::vector<double>& values) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * 8));
    } else {
        for (double d : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            bits = bswap64(bits);
            out.write(reinterpret_cast<const char*>(&bits), 8);
        }
    }
}

inline void read_f64_block(std::ifstream& in, std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * 8));
    } else {
        for (double& d : values) {
            std::uint64_t bits = 0;
            in.read(reinterpret_cast<char*>(&bits), 8);
            bits = bswap64(bits);
            std::memcpy(&d, &bits, 8);
        }
    }
}

inline void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline json load_json(const fs::path& path, const char* expected_schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    json doc = json::parse(in);
    if (!doc.contains("_schema") || doc["_schema"] != expected_schema)
        throw std::runtime_error("unexpected schema in " + path.string());
    return doc;
}

inline json composition_json(const CompositionProfile& p) {
    return json(std::vector<double>(p.fractions.begin(), p.fractions.end()));
}

inline CompositionProfile composition_from_json(const json& j) {
    CompositionProfile p;
    for (std::size_t c = 0; c < kClassCount; ++c) p.fractions[c] = j.at(c).get<double>();
    return p;
}

}  // namespace detail

/// Scenes plus the generator that labeled them.
struct StoredDataset {
    std::vector<Scene> scenes;
    GroundTruthModel model;
    std::size_t height = 8;
    std::size_t width = 8;
};

inline void write_grids(const fs::path& path, const std::vector<Scene>& scenes,
                        std::size_t height, std::size_t width) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(kGridMagic, 8);
    detail::write_u32(out, static_cast<std::uint32_t>(scenes.size()));
    detail::write_u32(out, static_cast<std::uint32_t>(height));
    detail::write_u32(out, static_cast<std::uint32_t>(width));
    detail::write_u32(out, 3);
    for (const Scene& s : scenes) {
        if (s.height != height || s.width != width)
            throw std::invalid_argument("write_grids: inconsistent scene dimensions");
        detail::write_f64_block(out, s.grid);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<std::vector<double>> read_grids(const fs::path& path, std::size_t expected_n,
                                                   std::size_t* height_out = nullptr,
                                                   std::size_t* width_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kGridMagic, 8) != 0)
        throw std::runtime_error("bad grid file magic: " + path.string());
    const std::uint32_t n = detail::read_u32(in);
    const std::uint32_t h = detail::read_u32(in);
    const std::uint32_t w = detail::read_u32(in);
    const std::uint32_t ch = detail::read_u32(in);
    if (ch != 3) throw std::runtime_error("unexpected channel count in " + path.string());
    if (expected_n != 0 && n != expected_n)
        throw std::runtime_error("grid count does not match manifest: " + path.string());
    std::vector<std::vector<double>> grids(n);
    for (auto& g : grids) {
        g.resize(static_cast<std::size_t>(h) * w * ch);
        detail::read_f64_block(in, g);
    }
    if (!in) throw std::runtime_error("truncated grid file: " + path.string());
    if (height_out) *height_out = h;
    if (width_out) *width_out = w;
    return grids;
}

inline void write_dataset(const fs::path& dir, const StoredDataset& dataset) {
    fs::create_directories(dir);
    json manifest;
    manifest["_schema"] = kDatasetSchema;
    manifest["n"] = dataset.scenes.size();
    manifest["grid_height"] = dataset.height;
    manifest["grid_width"] = dataset.width;
    manifest["channels"] = 3;
    manifest["ground_truth"] = {
        {"weights", std::vector<double>(dataset.model.weights.begin(),
                                        dataset.model.weights.end())},
        {"noise_std", dataset.model.noise_std},
        {"nonlinear", dataset.model.nonlinear},
    };
    json scenes = json::array();
    for (const Scene& s : dataset.scenes) {
        scenes.push_back({
            {"id", s.id},
            {"target", s.target},
            {"split", split_name(s.split)},
            {"composition", detail::composition_json(s.composition)},
        });
    }
    manifest["scenes"] = std::move(scenes);
    detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    write_grids(dir / "grids.bin", dataset.scenes, dataset.height, dataset.width);
}

inline StoredDataset load_dataset(const fs::path& dir) {
    const json manifest = detail::load_json(dir / "manifest.json", kDatasetSchema);
    StoredDataset out;
    out.height = manifest.at("grid_height").get<std::size_t>();
    out.width = manifest.at("grid_width").get<std::size_t>();
    const auto& gt = manifest.at("ground_truth");
    for (std::size_t c = 0; c < kClassCount; ++c)
        out.model.weights[c] = gt.at("weights").at(c).get<double>();
    out.model.noise_std = gt.at("noise_std").get<double>();
    out.model.nonlinear = gt.at("nonlinear").get<bool>();

    const std::size_t n = manifest.at("n").get<std::size_t>();
    std::vector<std::vector<double>> grids = read_grids(dir / "grids.bin", n);
    const auto& scenes = manifest.at("scenes");
    if (scenes.size() != n) throw std::runtime_error("manifest scene count mismatch");
    out.scenes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Scene& s = out.scenes[i];
        s.id = scenes.at(i).at("id").get<std::uint64_t>();
        s.target = scenes.at(i).at("target").get<double>();
        s.split = split_from_name(scenes.at(i).at("split").get<std::string>());
        s.composition = detail::composition_from_json(scenes.at(i).at("composition"));
        s.height = out.height;
        s.width = out.width;
        s.grid = std::move(grids[i]);
    }
    return out;
}

inline void write_concept_set(const fs::path& dir, const std::string& name,
                              const std::vector<Scene>& scenes, std::size_t height,
                              std::size_t width) {
    fs::create_directories(dir);
    json manifest;
    manifest["_schema"] = kConceptSchema;
    manifest["concept"] = name;
    manifest["n"] = scenes.size();
    manifest["grid_height"] = height;
    manifest["grid_width"] = width;
    manifest["channels"] = 3;
    json entries = json::array();
    for (const Scene& s : scenes)
        entries.push_back({
            {"id", s.id},
            {"composition", detail::composition_json(s.composition)},
        });
    manifest["scenes"] = std::move(entries);
    detail::write_text(dir / (name + ".json"), manifest.dump(2) + "\n");
    write_grids(dir / (name + ".bin"), scenes, height, width);
}

inline std::vector<Scene> load_concept_set(const fs::path& dir, const std::string& name) {
    const json manifest = detail::load_json(dir / (name + ".json"), kConceptSchema);
    if (manifest.at("concept").get<std::string>() != name)
        throw std::runtime_error("concept name mismatch in " + name);
    const std::size_t n = manifest.at("n").get<std::size_t>();
    std::size_t h = 0, w = 0;
    std::vector<std::vector<double>> grids = read_grids(dir / (name + ".bin"), n, &h, &w);
    std::vector<Scene> scenes(n);
    const auto& entries = manifest.at("scenes");
    for (std::size_t i = 0; i < n; ++i) {
        scenes[i].id = entries.at(i).at("id").get<std::uint64_t>();
        scenes[i].composition = detail::composition_from_json(entries.at(i).at("composition"));
        scenes[i].height = h;
        scenes[i].width = w;
        scenes[i].grid = std::move(grids[i]);
    }
    return scenes;
}

inline json train_config_json(const TrainConfig& cfg) {
    return json{
        {"pretrain_steps", cfg.pretrain_steps},
        {"pretrain_epochs", cfg.pretrain_epochs},
        {"probe_epochs", cfg.probe_epochs},
        {"batch_scenes", cfg.batch_scenes},
        {"pretrain_lr", cfg.pretrain_lr},
        {"probe_lr", cfg.probe_lr},
        {"baseline_lr", cfg.baseline_lr},
        {"lr_final_ratio", cfg.lr_final_ratio},
        {"rnc_temperature", cfg.rnc_temperature},
        {"optimizer", optimizer_name(cfg.optimizer)},
        {"augment_noise_std", cfg.augment.noise_std},
        {"augment_hflip", cfg.augment.horizontal_flip},
        {"hidden_widths", cfg.hidden_widths},
        {"embedding_dim", cfg.embedding_dim},
        {"seed", cfg.seed},
    };
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.pretrain_steps = j.at("pretrain_steps").get<std::size_t>();
    cfg.pretrain_epochs = j.at("pretrain_epochs").get<std::size_t>();
    cfg.probe_epochs = j.at("probe_epochs").get<std::size_t>();
    cfg.batch_scenes = j.at("batch_scenes").get<std::size_t>();
    cfg.pretrain_lr = j.at("pretrain_lr").get<double>();
    cfg.probe_lr = j.at("probe_lr").get<double>();
    cfg.baseline_lr = j.at("baseline_lr").get<double>();
    cfg.lr_final_ratio = j.at("lr_final_ratio").get<double>();
    cfg.rnc_temperature = j.at("rnc_temperature").get<double>();
    cfg.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
    cfg.augment.noise_std = j.at("augment_noise_std").get<double>();
    cfg.augment.horizontal_flip = j.at("augment_hflip").get<bool>();
    cfg.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
    cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

/// A trained pipeline: encoder, head, config snapshot, and the seed stream
/// identifier that reproduces it (all randomness is derived from it).
struct Checkpoint {
    MlpEncoder encoder;
    LinearHead head;
    TrainConfig config;
    std::string variant;  // rnc-pretrained | supervised-baseline | random-init
    std::uint64_t rng_state = 0;
};

inline void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
    json doc;
    doc["_schema"] = kCheckpointSchema;
    doc["variant"] = ckpt.variant;
    doc["rng_state"] = ckpt.rng_state;
    doc["config"] = train_config_json(ckpt.config);
    json layers = json::array();
    for (const Layer& l : ckpt.encoder.layers()) {
        layers.push_back({
            {"activation", l.activation == Activation::kReLU ? "relu" : "identity"},
            {"out", l.weights.rows},
            {"in", l.weights.cols},
            {"weights", l.weights.data},
            {"bias", l.bias},
        });
    }
    doc["encoder"] = {{"layers", std::move(layers)}};
    doc["head"] = {{"weights", ckpt.head.weights}, {"bias", ckpt.head.bias}};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    detail::write_text(path, doc.dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const fs::path& path) {
    const json doc = detail::load_json(path, kCheckpointSchema);
    Checkpoint ckpt;
    ckpt.variant = doc.at("variant").get<std::string>();
    ckpt.rng_state = doc.at("rng_state").get<std::uint64_t>();
    ckpt.config = train_config_from_json(doc.at("config"));
    std::vector<Layer> layers;
    for (const auto& lj : doc.at("encoder").at("layers")) {
        Layer l;
        const std::size_t rows = lj.at("out").get<std::size_t>();
        const std::size_t cols = lj.at("in").get<std::size_t>();
        l.weights = Matrix(rows, cols, lj.at("weights").get<std::vector<double>>());
        l.bias = lj.at("bias").get<std::vector<double>>();
        l.activation = lj.at("activation").get<std::string>() == "relu" ? Activation::kReLU
                                                                        : Activation::kIdentity;
        layers.push_back(std::move(l));
    }
    ckpt.encoder = MlpEncoder(std::move(layers));
    ckpt.head.weights = doc.at("head").at("weights").get<std::vector<double>>();
    ckpt.head.bias = doc.at("head").at("bias").get<double>();
    return ckpt;
}

inline void write_loss_curve(const fs::path& path, const std::vector<double>& losses) {
    CsvWriter csv(path, "ranklens/loss-curve/v1", {"step", "loss"});
    for (std::size_t i = 0; i < losses.size(); ++i) {
        csv.field(i).field(losses[i]);
        csv.end_row();
    }
}

inline void write_probe_curve(const fs::path& path, const std::vector<ProbeEpochStat>& curve) {
    CsvWriter csv(path, "ranklens/probe-curve/v1", {"epoch", "train_mae", "val_r2"});
    for (const ProbeEpochStat& s : curve) {
        csv.field(s.epoch).field(s.train_mae).field(s.val_r2);
        csv.end_row();
    }
}

inline json metrics_json(const MetricsReport& r) {
    return json{{"split", r.split}, {"r2", r.r2}, {"kendall_tau", r.kendall_tau}, {"n", r.n}};
}

inline void write_cavs(const fs::path& path, const std::vector<Cav>& cavs) {
    json doc;
    doc["_schema"] = kCavsSchema;
    json arr = json::array();
    for (const Cav& cav : cavs) {
        arr.push_back({
            {"concept", cav.concept_name},
            {"layer", cav.layer},
            {"direction", cav.direction},
            {"bias", cav.bias},
            {"accuracy", cav.holdout_accuracy},
            {"seed", cav.seed},
            {"negative_shortfall", cav.negative_shortfall},
        });
    }
    doc["cavs"] = std::move(arr);
    detail::write_text(path, doc.dump(2) + "\n");
}

inline std::vector<Cav> load_cavs(const fs::path& path) {
    const json doc = detail::load_json(path, kCavsSchema);
    std::vector<Cav> cavs;
    for (const auto& cj : doc.at("cavs")) {
        Cav cav;
        cav.concept_name = cj.at("concept").get<std::string>();
        cav.layer = cj.at("layer").get<std::size_t>();
        cav.direction = cj.at("direction").get<std::vector<double>>();
        cav.bias = cj.at("bias").get<double>();
        cav.holdout_accuracy = cj.at("accuracy").get<double>();
        cav.seed = cj.at("seed").get<std::uint64_t>();
        cav.negative_shortfall = cj.at("negative_shortfall").get<bool>();
        cavs.push_back(std::move(cav));
    }
    return cavs;
}

inline void write_accuracy_table(const fs::path& path, const ConceptAccuracyTable& table) {
    CsvWriter csv(path, "ranklens/concept-accuracy/v1", {"concept", "layer", "accuracy"});
    for (std::size_t c = 0; c < table.concepts.size(); ++c) {
        for (std::size_t l = 0; l < table.layers.size(); ++l) {
            csv.field(table.concepts[c]).field(table.layers[l]).field(table.at(c, l));
            csv.end_row();
        }
    }
}

inline void write_sensitivities(const fs::path& path,
                                const std::vector<SensitivityRecord>& records,
                                const std::vector<std::size_t>& bins) {
    CsvWriter csv(path, "ranklens/sensitivity/v1",
                  {"scene_id", "label", "concept", "layer", "method", "s", "s_normalized",
                   "bin"});
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SensitivityRecord& r = records[i];
        csv.field(r.scene_id)
            .field(r.label)
            .field(r.concept_name)
            .field(r.layer)
            .field(std::string(method_name(r.method)))
            .field(r.value)
            .field(r.normalized)
            .field(bins.empty() ? std::size_t{0} : bins[i]);
        csv.end_row();
    }
}

inline void write_alignment(const fs::path& path, const std::vector<AlignmentRecord>& records,
                            const std::vector<Cav>& cavs) {
    std::vector<std::string> columns = {"scene_id", "label", "best_concept"};
    for (const Cav& cav : cavs) columns.push_back("cos_raw_" + cav.concept_name);
    for (const Cav& cav : cavs) columns.push_back("cos_norm_" + cav.concept_name);
    CsvWriter csv(path, "ranklens/alignment/v1", columns);
    for (const AlignmentRecord& r : records) {
        csv.field(r.scene_id).field(r.label).field(cavs[r.best_concept].concept_name);
        for (double v : r.cosine_raw) csv.field(v);
        for (double v : r.cosine_normalized) csv.field(v);
        csv.end_row();
    }
}

struct ProfileRow {
    std::string concept_name;
    std::size_t layer = 0;
    SensitivityMethod method = SensitivityMethod::kPlainGradient;
    std::vector<SensitivityBin> bins;
};

inline void write_profiles(const fs::path& path, const std::vector<ProfileRow>& rows) {
    CsvWriter csv(path, "ranklens/sensitivity-profile/v1",
                  {"concept", "layer", "method", "bin", "label_lo", "label_hi",
                   "mean_normalized_s", "count"});
    for (const ProfileRow& row : rows) {
        for (std::size_t b = 0; b < row.bins.size(); ++b) {
            const SensitivityBin& bin = row.bins[b];
            csv.field(row.concept_name)
                .field(row.layer)
                .field(std::string(method_name(row.method)))
                .field(b)
                .field(bin.label_lo)
                .field(bin.label_hi)
                .field(bin.mean_normalized)
                .field(bin.count);
            csv.end_row();
        }
    }
}

inline void write_tcav_summary(const fs::path& path, const std::vector<TcavScore>& scores) {
    json doc;
    doc["_schema"] = kTcavSchema;
    json arr = json::array();
    for (const TcavScore& s : scores) {
        arr.push_back({
            {"concept", s.concept_name},
            {"layer", s.layer},
            {"method", method_name(s.method)},
            {"score", s.score},
            {"n", s.n},
        });
    }
    doc["scores"] = std::move(arr);
    detail::write_text(path, doc.dump(2) + "\n");
}

inline void write_projection(const fs::path& path, const std::vector<std::uint64_t>& ids,
                             const std::vector<double>& labels, const Matrix& coords,
                             const std::string& tag) {
    CsvWriter csv(path, "ranklens/projection/v1", {"scene_id", "label", "x", "y", "tag"});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        csv.field(ids[i]).field(labels[i]).field(coords(i, 0)).field(coords(i, 1)).field(tag);
        csv.end_row();
    }
}

}  // namespace ranklens::io
