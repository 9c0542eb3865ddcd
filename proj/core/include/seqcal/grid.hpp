#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seqcal {

enum class InertiaPolicy { warn, reject };

/// Forecast grid {0, 1/K, ..., 1} and the history weight T of the grid walk.
///
/// Levels are addressed by integer index j in 0..K; the value j/K is only
/// materialized at the API edge. The half-step is eta = 1/(2K).
struct GridConfig {
    int levels = 10;
    std::int64_t inertia = 1000;

    double eta() const noexcept { return 1.0 / (2.0 * levels); }
    double level_value(int j) const noexcept { return static_cast<double>(j) / levels; }
    /// Calibration tolerance 2/K + K/T.
    double bound() const noexcept {
        return 2.0 / levels + static_cast<double>(levels) / static_cast<double>(inertia);
    }
    /// Index nearest 0.5, ties downward.
    int center_level() const noexcept { return levels / 2; }

    /// Throws std::invalid_argument for K < 1 or T < 1. When T < K the result
    /// carries a warning, or the call throws under InertiaPolicy::reject.
    std::vector<std::string> validate(InertiaPolicy policy = InertiaPolicy::warn) const;

    bool operator==(const GridConfig&) const = default;
};

} // namespace seqcal
