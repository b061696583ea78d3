#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranklens/train.hpp"

// Flat key-value run configuration. The file format is plain text:
//
//   # comment
//   [dataset]
//   n = 2000
//   noise_std = 0.05
//
// Section headers prefix the keys ("dataset.n"). Command-line flags override
// any key read from a file.

namespace ranklens {

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline ConfigMap parse_config_text(std::istream& in, const std::string& origin) {
    ConfigMap map;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                            ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": empty key");
        map[section.empty() ? key : section + "." + key] = value;
    }
    return map;
}

inline ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return parse_config_text(in, path);
}

/// Everything a full pipeline run needs; defaults are the desk-scale setup.
struct RunConfig {
    // dataset
    std::size_t n = 2000;
    std::size_t grid = 8;
    double noise_std = 0.05;
    bool nonlinear = false;
    std::size_t quantiles = 5;
    // concepts
    std::size_t per_concept = 200;
    std::size_t negatives = 500;
    // tcav
    std::size_t ig_steps = 50;
    std::size_t bins = 5;
    // training
    TrainConfig train;
    // run
    std::uint64_t seed = 0;

    void validate() const {
        train.validate();
        if (grid < 4) throw std::invalid_argument("RunConfig: grid must be at least 4");
        if (bins < 2) throw std::invalid_argument("RunConfig: bins must be at least 2");
        if (ig_steps < 2) throw std::invalid_argument("RunConfig: ig_steps must be at least 2");
        if (noise_std < 0.0) throw std::invalid_argument("RunConfig: negative noise_std");
    }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config key " + key + ": not a number: " + value);
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config key " + key + ": not an integer: " + value);
    }
}

inline bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw std::invalid_argument("config key " + key + ": not a boolean: " + value);
}

inline std::vector<std::size_t> to_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<std::size_t>(to_u64(key, item)));
    }
    if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
    return out;
}

}  // namespace detail

/// Applies a parsed key-value map onto a RunConfig. Unknown keys are errors
/// so typos do not silently fall back to defaults.
inline void apply_config(RunConfig& cfg, const ConfigMap& map) {
    for (const auto& [key, value] : map) {
        if (key == "dataset.n") cfg.n = detail::to_u64(key, value);
        else if (key == "dataset.grid") cfg.grid = detail::to_u64(key, value);
        else if (key == "dataset.noise_std") cfg.noise_std = detail::to_double(key, value);
        else if (key == "dataset.nonlinear") cfg.nonlinear = detail::to_bool(key, value);
        else if (key == "dataset.quantiles") cfg.quantiles = detail::to_u64(key, value);
        else if (key == "concepts.per_concept") cfg.per_concept = detail::to_u64(key, value);
        else if (key == "concepts.negatives") cfg.negatives = detail::to_u64(key, value);
        else if (key == "tcav.ig_steps") cfg.ig_steps = detail::to_u64(key, value);
        else if (key == "tcav.bins") cfg.bins = detail::to_u64(key, value);
        else if (key == "train.pretrain_steps")
            cfg.train.pretrain_steps = detail::to_u64(key, value);
        else if (key == "train.pretrain_epochs")
            cfg.train.pretrain_epochs = detail::to_u64(key, value);
        else if (key == "train.probe_epochs") cfg.train.probe_epochs = detail::to_u64(key, value);
        else if (key == "train.batch_scenes") cfg.train.batch_scenes = detail::to_u64(key, value);
        else if (key == "train.pretrain_lr") cfg.train.pretrain_lr = detail::to_double(key, value);
        else if (key == "train.probe_lr") cfg.train.probe_lr = detail::to_double(key, value);
        else if (key == "train.baseline_lr") cfg.train.baseline_lr = detail::to_double(key, value);
        else if (key == "train.lr_final_ratio")
            cfg.train.lr_final_ratio = detail::to_double(key, value);
        else if (key == "train.temperature")
            cfg.train.rnc_temperature = detail::to_double(key, value);
        else if (key == "train.optimizer") cfg.train.optimizer = optimizer_from_name(value);
        else if (key == "train.augment_noise_std")
            cfg.train.augment.noise_std = detail::to_double(key, value);
        else if (key == "train.augment_hflip")
            cfg.train.augment.horizontal_flip = detail::to_bool(key, value);
        else if (key == "train.hidden_widths")
            cfg.train.hidden_widths = detail::to_size_list(key, value);
        else if (key == "train.embedding_dim")
            cfg.train.embedding_dim = detail::to_u64(key, value);
        else if (key == "run.seed") cfg.seed = detail::to_u64(key, value);
        else
            throw std::invalid_argument("unknown config key: " + key);
    }
    cfg.train.seed = cfg.seed;
}

}  // namespace ranklens
