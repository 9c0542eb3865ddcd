#pragma once

#include "seqcal/grid.hpp"

#include <cstdint>
#include <optional>

namespace seqcal {

enum class Exit { up, down, open };

const char* to_string(Exit exit) noexcept;

/// One phase of the grid walk: forecast level `level` was issued at times
/// start..end (inclusive), and the outcomes those forecasts targeted are the
/// end - start + 1 outcomes observed during the phase.
struct EpisodeRecord {
    int level = 0;
    std::int64_t start = 1;
    std::int64_t end = 0;
    Exit exit = Exit::open;

    std::int64_t length() const noexcept { return end - start + 1; }
    bool operator==(const EpisodeRecord&) const = default;
};

struct CalibratorState {
    int level_index = 0;
    std::int64_t phase_start = 1;
    double phase_sum = 0.0;
    std::int64_t now = 1;
    std::int64_t episode_count = 0;

    bool operator==(const CalibratorState&) const = default;
};

/// Deterministic self-calibrating forecaster walking on the grid {j/K}.
///
/// The current level is held while the T-weighted mean
///   (T * level + sum of phase outcomes) / (T + phase length)
/// stays inside the closed band [level - eta, level + eta]; the first outcome
/// that pushes it strictly outside moves the level one grid step in that
/// direction and starts a new phase.
class Calibrator {
public:
    /// Starts at time 1 on `initial_level`, or on the grid index nearest 0.5.
    explicit Calibrator(GridConfig config, std::optional<int> initial_level = std::nullopt);

    double predict() const noexcept { return config_.level_value(state_.level_index); }
    int level() const noexcept { return state_.level_index; }

    /// Consumes outcome z in [0, 1]. Returns the closed episode when the level
    /// changes at this step.
    std::optional<EpisodeRecord> observe(double z);

    /// The phase in progress; empty (end < start) right after a transition.
    EpisodeRecord open_episode() const noexcept;

    const CalibratorState& state() const noexcept { return state_; }
    const GridConfig& config() const noexcept { return config_; }
    std::int64_t now() const noexcept { return state_.now; }

private:
    GridConfig config_;
    CalibratorState state_;
};

} // namespace seqcal
