#pragma once

#include "seqcal/calibrator.hpp"
#include "seqcal/grid.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace seqcal {

/// Outcomes credited to edge j (between levels j-1 and j): episodes at level
/// j that exited down (the A set) and episodes at level j-1 that exited up
/// (the B set).
struct EdgeStats {
    double sum = 0.0;
    std::int64_t count = 0;
    std::int64_t down_episodes = 0;
    std::int64_t up_episodes = 0;
};

struct LevelStats {
    std::int64_t visits = 0;
    double outcome_sum = 0.0;
};

/// Times [from, to) during which edge `edge` had |R_tj - xi_j| above the bound.
/// An open span has to == -1.
struct ViolationSpan {
    int edge = 0;
    std::int64_t from = 0;
    std::int64_t to = -1;
};

/// Edge-episode bookkeeping and conditional means for one grid-walk run.
///
/// Time follows the calibrator: the audit starts at time 1 and each
/// record_forecast() advances it by one. R_tj changes only when an episode is
/// recorded, so violations are kept as spans rather than per-step flags.
class CalibrationAudit {
public:
    explicit CalibrationAudit(GridConfig config);

    /// One step: forecast `level` was issued and `outcome` then observed.
    void record_forecast(int level, double outcome);

    /// Assigns a closed episode to its edge set. `outcomes` are the outcomes the
    /// episode's forecasts targeted, one per forecast time.
    void record(const EpisodeRecord& episode, std::span<const double> outcomes);

    /// Running R_tj for edge j in 1..K; empty when the edge has no episodes.
    std::optional<double> edge_mean(int j) const;

    /// Mean outcome over steps whose forecast lay strictly within eps of z.
    /// Throws for eps <= 0 or z outside [0, 1].
    std::optional<double> r_stat(double z, double eps) const;

    const EdgeStats& edge(int j) const { return edges_.at(j); }
    const LevelStats& level(int j) const { return levels_.at(j); }
    const std::vector<ViolationSpan>& violation_spans() const noexcept { return spans_; }

    std::int64_t now() const noexcept { return now_; }
    std::int64_t steps() const noexcept { return now_ - 1; }
    /// Time of the most recent level change (1 when none).
    std::int64_t last_transition() const noexcept { return last_transition_; }
    int last_level() const noexcept { return last_level_; }
    std::int64_t episodes() const noexcept { return episodes_; }
    const GridConfig& config() const noexcept { return config_; }

    /// Adds sums and counts of an audit over the same grid. Violation spans of
    /// `other` are appended unchanged; the time axis becomes the total step count.
    void merge(const CalibrationAudit& other);

private:
    void update_violation(int j, std::int64_t at);

    GridConfig config_;
    std::vector<EdgeStats> edges_;    // index 0 unused
    std::vector<LevelStats> levels_;
    std::vector<ViolationSpan> spans_;
    std::vector<int> open_span_;      // per edge, index into spans_ or -1
    std::int64_t now_ = 1;
    std::int64_t last_transition_ = 1;
    std::int64_t episodes_ = 0;
    int last_level_ = 0;
};

inline constexpr int kViolationHistogramBins = 10;

struct LevelReport {
    int level = 0;
    double value = 0.0;
    std::int64_t visits = 0;
    std::int64_t edge_count = 0;
    std::int64_t down_episodes = 0;
    std::int64_t up_episodes = 0;
    std::optional<double> edge_mean;
    double bound = 0.0;
    std::int64_t violations = 0;
    std::int64_t late_violations = 0;
    std::array<std::int64_t, kViolationHistogramBins> violation_histogram{};
    bool rarely_visited = true;

    std::optional<double> deviation() const;
};

/// Desk-scale reading of the finite-violation guarantee.
///
/// A level with fewer than min_visits forecasts is flagged rarely visited and
/// excluded from max_deviation and the violation-step totals. "Late" means the
/// second half of the run's steps.
struct BoundReport {
    std::vector<LevelReport> levels;
    std::int64_t horizon = 0;
    std::int64_t min_visits = 0;
    double bound = 0.0;
    std::int64_t episodes = 0;
    int qualifying_levels = 0;
    double max_deviation = 0.0;
    std::int64_t violation_steps = 0;
    std::int64_t late_violation_steps = 0;
    double late_violation_fraction = 0.0;
    /// Set when the final open episode covers at least half the run.
    std::optional<int> absorbed_level;

    bool bound_holds() const noexcept { return max_deviation <= bound; }
};

BoundReport bound_report(const CalibrationAudit& audit, std::int64_t min_visits);

/// Empirical calibration of arbitrary (off-grid) forecasts at fixed probes.
class ProbeCalibration {
public:
    ProbeCalibration(std::vector<double> probes, double eps);
    /// Probes at the grid levels; eps defaults to eta.
    static ProbeCalibration on_grid(const GridConfig& config,
                                    std::optional<double> eps = std::nullopt);

    void record(double forecast, double outcome);
    void reset();

    std::span<const double> probes() const noexcept { return probes_; }
    double eps() const noexcept { return eps_; }
    std::optional<double> r(std::size_t probe) const;
    std::int64_t count(std::size_t probe) const { return counts_.at(probe); }
    /// max |r(z) - z| over probes with at least one hit; 0 when none.
    double max_miscalibration() const;

private:
    std::vector<double> probes_;
    double eps_;
    std::vector<double> sums_;
    std::vector<std::int64_t> counts_;
};

/// A Calibrator wired to its CalibrationAudit, with an optional episode log.
class AuditedCalibrator {
public:
    explicit AuditedCalibrator(GridConfig config, std::optional<int> initial_level = std::nullopt,
                               bool keep_episode_log = true);

    double predict() const noexcept { return calibrator_.predict(); }
    std::optional<EpisodeRecord> observe(double z);

    const Calibrator& calibrator() const noexcept { return calibrator_; }
    const CalibrationAudit& audit() const noexcept { return audit_; }
    const std::vector<EpisodeRecord>& episodes() const noexcept { return log_; }

private:
    Calibrator calibrator_;
    CalibrationAudit audit_;
    std::vector<double> phase_outcomes_;
    std::vector<EpisodeRecord> log_;
    bool keep_log_;
};

/// Columns: j, xi_j, visits, edge_count, R_Tj, bound, violations.
void write_audit_csv(std::ostream& out, const BoundReport& report);
/// Columns: episode_index, level, start, end, exit. `open` is appended last
/// when it is non-empty.
void write_episodes_csv(std::ostream& out, const GridConfig& config,
                        std::span<const EpisodeRecord> closed,
                        std::optional<EpisodeRecord> open = std::nullopt);

} // namespace seqcal
