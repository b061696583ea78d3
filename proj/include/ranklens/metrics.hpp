#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ranklens {

/// R^2 and Kendall tau for one prediction set on a named split.
struct MetricsReport {
    std::string split;
    double r2 = 0.0;
    double kendall_tau = 0.0;
    std::size_t n = 0;
};

/// Coefficient of determination, 1 - SS_res / SS_tot with mean-based SS_tot.
/// Zero label variance is an explicit error so callers must deal with
/// degenerate splits instead of propagating NaN.
inline double r_squared(const std::vector<double>& predictions,
                        const std::vector<double>& labels) {
    const std::size_t n = labels.size();
    if (predictions.size() != n) throw std::invalid_argument("r_squared: length mismatch");
    if (n < 2) throw std::invalid_argument("r_squared: need at least 2 points");
    double mean = 0.0;
    for (double y : labels) mean += y;
    mean /= static_cast<double>(n);
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_tot += (labels[i] - mean) * (labels[i] - mean);
        ss_res += (labels[i] - predictions[i]) * (labels[i] - predictions[i]);
    }
    if (ss_tot == 0.0) throw std::domain_error("r_squared: zero label variance");
    return 1.0 - ss_res / ss_tot;
}

/// Kendall tau-b (tie corrected), by exhaustive pair comparison.
inline double kendall_tau(const std::vector<double>& predictions,
                          const std::vector<double>& labels) {
    const std::size_t n = labels.size();
    if (predictions.size() != n) throw std::invalid_argument("kendall_tau: length mismatch");
    if (n < 2) throw std::invalid_argument("kendall_tau: need at least 2 points");

    long long concordant = 0, discordant = 0;
    long long ties_x = 0, ties_y = 0;  // tied only in predictions / only in labels
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = predictions[i] - predictions[j];
            const double dy = labels[i] - labels[j];
            if (dx == 0.0 && dy == 0.0) continue;  // tied in both: drops from both corrections
            if (dx == 0.0) {
                ++ties_x;
            } else if (dy == 0.0) {
                ++ties_y;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double nx = static_cast<double>(concordant + discordant + ties_x);
    const double ny = static_cast<double>(concordant + discordant + ties_y);
    if (nx == 0.0 || ny == 0.0)
        throw std::domain_error("kendall_tau: all pairs tied");
    return static_cast<double>(concordant - discordant) / std::sqrt(nx * ny);
}

}  // namespace ranklens
