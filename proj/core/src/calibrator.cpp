#include "seqcal/calibrator.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace seqcal {

const char* to_string(Exit exit) noexcept {
    switch (exit) {
    case Exit::up: return "up";
    case Exit::down: return "down";
    case Exit::open: return "open";
    }
    return "?";
}

Calibrator::Calibrator(GridConfig config, std::optional<int> initial_level)
    : config_(config) {
    config_.validate();
    const int level = initial_level.value_or(config_.center_level());
    if (level < 0 || level > config_.levels)
        throw std::invalid_argument("calibrator: initial level " + std::to_string(level) +
                                    " outside 0.." + std::to_string(config_.levels));
    state_.level_index = level;
}

std::optional<EpisodeRecord> Calibrator::observe(double z) {
    if (!(z >= 0.0 && z <= 1.0))
        throw std::domain_error("calibrator: outcome must lie in [0, 1]");

    state_.phase_sum += z;
    ++state_.now;

    // The band test (T*j/K + S)/(T + n) vs (2j +- 1)/(2K), multiplied through by
    // 2K(T + n) so that level values never enter as rounded fractions.
    const double j = state_.level_index;
    const double k = config_.levels;
    const double t = static_cast<double>(config_.inertia);
    const double n = static_cast<double>(state_.now - state_.phase_start);
    const double scaled_mean = 2.0 * (t * j + k * state_.phase_sum);
    const double weight = t + n;

    Exit exit = Exit::open;
    if (scaled_mean > (2.0 * j + 1.0) * weight)
        exit = Exit::up;
    else if (scaled_mean < (2.0 * j - 1.0) * weight)
        exit = Exit::down;
    if (exit == Exit::open) return std::nullopt;

    assert(!(exit == Exit::up && state_.level_index == config_.levels));
    assert(!(exit == Exit::down && state_.level_index == 0));

    EpisodeRecord closed{state_.level_index, state_.phase_start, state_.now - 1, exit};
    state_.level_index += exit == Exit::up ? 1 : -1;
    state_.phase_start = state_.now;
    state_.phase_sum = 0.0;
    ++state_.episode_count;
    return closed;
}

EpisodeRecord Calibrator::open_episode() const noexcept {
    return {state_.level_index, state_.phase_start, state_.now - 1, Exit::open};
}

} // namespace seqcal
