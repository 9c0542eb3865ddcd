#include "seqcal/audit.hpp"

#include "seqcal/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace seqcal {

CalibrationAudit::CalibrationAudit(GridConfig config)
    : config_(config),
      edges_(static_cast<std::size_t>(config.levels) + 1),
      levels_(static_cast<std::size_t>(config.levels) + 1),
      open_span_(static_cast<std::size_t>(config.levels) + 1, -1) {
    config_.validate();
}

void CalibrationAudit::record_forecast(int level, double outcome) {
    auto& stats = levels_.at(static_cast<std::size_t>(level));
    ++stats.visits;
    stats.outcome_sum += outcome;
    last_level_ = level;
    ++now_;
}

void CalibrationAudit::record(const EpisodeRecord& episode, std::span<const double> outcomes) {
    if (episode.exit == Exit::open)
        throw std::invalid_argument("audit: cannot record an open episode");
    if (episode.length() < 1 || static_cast<std::int64_t>(outcomes.size()) != episode.length())
        throw std::invalid_argument("audit: outcome count does not match the episode length");

    int edge = 0;
    if (episode.exit == Exit::down) {
        if (episode.level < 1) throw std::invalid_argument("audit: down exit from level 0");
        edge = episode.level;
    } else {
        if (episode.level >= config_.levels)
            throw std::invalid_argument("audit: up exit from the top level");
        edge = episode.level + 1;
    }

    auto& stats = edges_[static_cast<std::size_t>(edge)];
    stats.sum += std::accumulate(outcomes.begin(), outcomes.end(), 0.0);
    stats.count += episode.length();
    if (episode.exit == Exit::down)
        ++stats.down_episodes;
    else
        ++stats.up_episodes;

    ++episodes_;
    last_transition_ = std::max(last_transition_, episode.end + 1);
    update_violation(edge, episode.end + 1);
}

void CalibrationAudit::update_violation(int j, std::int64_t at) {
    const auto mean = edge_mean(j);
    const bool violating = mean && std::abs(*mean - config_.level_value(j)) > config_.bound();
    auto& open = open_span_[static_cast<std::size_t>(j)];
    if (violating && open < 0) {
        open = static_cast<int>(spans_.size());
        spans_.push_back({j, at, -1});
    } else if (!violating && open >= 0) {
        spans_[static_cast<std::size_t>(open)].to = at;
        open = -1;
    }
}

std::optional<double> CalibrationAudit::edge_mean(int j) const {
    if (j < 1 || j > config_.levels) throw std::out_of_range("audit: edge index outside 1..K");
    const auto& stats = edges_[static_cast<std::size_t>(j)];
    if (stats.count == 0) return std::nullopt;
    return stats.sum / static_cast<double>(stats.count);
}

std::optional<double> CalibrationAudit::r_stat(double z, double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("r_stat: eps must be positive");
    if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("r_stat: probe must lie in [0, 1]");
    double sum = 0.0;
    std::int64_t count = 0;
    for (int j = 0; j <= config_.levels; ++j) {
        if (std::abs(config_.level_value(j) - z) < eps) {
            sum += levels_[static_cast<std::size_t>(j)].outcome_sum;
            count += levels_[static_cast<std::size_t>(j)].visits;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

void CalibrationAudit::merge(const CalibrationAudit& other) {
    if (!(other.config_ == config_)) throw std::invalid_argument("audit: merging different grids");
    for (std::size_t j = 0; j < edges_.size(); ++j) {
        edges_[j].sum += other.edges_[j].sum;
        edges_[j].count += other.edges_[j].count;
        edges_[j].down_episodes += other.edges_[j].down_episodes;
        edges_[j].up_episodes += other.edges_[j].up_episodes;
        levels_[j].visits += other.levels_[j].visits;
        levels_[j].outcome_sum += other.levels_[j].outcome_sum;
    }
    spans_.insert(spans_.end(), other.spans_.begin(), other.spans_.end());
    now_ += other.steps();
    episodes_ += other.episodes_;
}

std::optional<double> LevelReport::deviation() const {
    if (!edge_mean) return std::nullopt;
    return std::abs(*edge_mean - value);
}

namespace {

using Range = std::pair<std::int64_t, std::int64_t>;  // [first, last) in time

std::int64_t overlap(Range a, Range b) {
    return std::max<std::int64_t>(0, std::min(a.second, b.second) - std::max(a.first, b.first));
}

} // namespace

BoundReport bound_report(const CalibrationAudit& audit, std::int64_t min_visits) {
    const auto& config = audit.config();
    BoundReport report;
    report.horizon = audit.steps();
    report.min_visits = min_visits;
    report.bound = config.bound();
    report.episodes = audit.episodes();

    const std::int64_t horizon = report.horizon;
    const std::int64_t end_time = audit.now() + 1;
    // step k = 1..H happens at time k + 1; late steps are k > H/2
    const Range late{horizon / 2 + 2, end_time};

    for (int j = 0; j <= config.levels; ++j) {
        LevelReport row;
        row.level = j;
        row.value = config.level_value(j);
        row.visits = audit.level(j).visits;
        row.bound = config.bound();
        row.rarely_visited = row.visits < min_visits;
        if (j >= 1) {
            const auto& edge = audit.edge(j);
            row.edge_count = edge.count;
            row.down_episodes = edge.down_episodes;
            row.up_episodes = edge.up_episodes;
            row.edge_mean = audit.edge_mean(j);
        }
        if (!row.rarely_visited) ++report.qualifying_levels;
        if (!row.rarely_visited && row.deviation())
            report.max_deviation = std::max(report.max_deviation, *row.deviation());
        report.levels.push_back(row);
    }

    std::vector<Range> qualifying;
    for (const auto& span : audit.violation_spans()) {
        const Range r{span.from, span.to < 0 ? end_time : std::min(span.to, end_time)};
        if (r.second <= r.first) continue;
        auto& row = report.levels[static_cast<std::size_t>(span.edge)];
        row.violations += r.second - r.first;
        row.late_violations += overlap(r, late);
        for (int b = 0; b < kViolationHistogramBins && horizon > 0; ++b) {
            // bin b holds steps k with floor((k - 1) * B / H) == b
            const std::int64_t k_lo = (b * horizon + kViolationHistogramBins - 1) / kViolationHistogramBins + 1;
            const std::int64_t k_hi =
                ((b + 1) * horizon + kViolationHistogramBins - 1) / kViolationHistogramBins + 1;
            row.violation_histogram[static_cast<std::size_t>(b)] += overlap(r, {k_lo + 1, k_hi + 1});
        }
        if (!row.rarely_visited) qualifying.push_back(r);
    }

    std::sort(qualifying.begin(), qualifying.end());
    Range current{0, 0};
    auto flush = [&](Range r) {
        report.violation_steps += r.second - r.first;
        report.late_violation_steps += overlap(r, late);
    };
    for (const auto& r : qualifying) {
        if (r.first <= current.second) {
            current.second = std::max(current.second, r.second);
        } else {
            flush(current);
            current = r;
        }
    }
    flush(current);

    const std::int64_t late_steps = horizon - horizon / 2;
    report.late_violation_fraction =
        late_steps > 0 ? static_cast<double>(report.late_violation_steps) / static_cast<double>(late_steps)
                       : 0.0;

    const std::int64_t open_length = audit.now() - audit.last_transition();
    if (horizon > 0 && 2 * open_length >= horizon) report.absorbed_level = audit.last_level();
    return report;
}

ProbeCalibration::ProbeCalibration(std::vector<double> probes, double eps)
    : probes_(std::move(probes)), eps_(eps), sums_(probes_.size(), 0.0), counts_(probes_.size(), 0) {
    if (!(eps_ > 0.0)) throw std::invalid_argument("probe calibration: eps must be positive");
}

ProbeCalibration ProbeCalibration::on_grid(const GridConfig& config, std::optional<double> eps) {
    std::vector<double> probes;
    for (int j = 0; j <= config.levels; ++j) probes.push_back(config.level_value(j));
    return ProbeCalibration(std::move(probes), eps.value_or(config.eta()));
}

void ProbeCalibration::record(double forecast, double outcome) {
    for (std::size_t i = 0; i < probes_.size(); ++i) {
        if (std::abs(forecast - probes_[i]) < eps_) {
            sums_[i] += outcome;
            ++counts_[i];
        }
    }
}

void ProbeCalibration::reset() {
    std::fill(sums_.begin(), sums_.end(), 0.0);
    std::fill(counts_.begin(), counts_.end(), 0);
}

std::optional<double> ProbeCalibration::r(std::size_t probe) const {
    if (counts_.at(probe) == 0) return std::nullopt;
    return sums_[probe] / static_cast<double>(counts_[probe]);
}

double ProbeCalibration::max_miscalibration() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < probes_.size(); ++i)
        if (auto value = r(i)) worst = std::max(worst, std::abs(*value - probes_[i]));
    return worst;
}

AuditedCalibrator::AuditedCalibrator(GridConfig config, std::optional<int> initial_level,
                                     bool keep_episode_log)
    : calibrator_(config, initial_level), audit_(config), keep_log_(keep_episode_log) {}

std::optional<EpisodeRecord> AuditedCalibrator::observe(double z) {
    const int level = calibrator_.level();
    auto closed = calibrator_.observe(z);
    audit_.record_forecast(level, z);
    phase_outcomes_.push_back(z);
    if (closed) {
        audit_.record(*closed, phase_outcomes_);
        phase_outcomes_.clear();
        if (keep_log_) log_.push_back(*closed);
    }
    return closed;
}

void write_audit_csv(std::ostream& out, const BoundReport& report) {
    CsvWriter csv(out);
    csv.header({"j", "xi_j", "visits", "edge_count", "R_Tj", "bound", "violations"});
    for (const auto& row : report.levels) {
        csv.field(row.level).field(row.value).field(row.visits);
        if (row.level == 0)
            csv.empty();
        else
            csv.field(row.edge_count);
        if (row.edge_mean)
            csv.field(*row.edge_mean);
        else
            csv.empty();
        csv.field(row.bound).field(row.violations);
        csv.end_row();
    }
}

void write_episodes_csv(std::ostream& out, const GridConfig& config,
                        std::span<const EpisodeRecord> closed, std::optional<EpisodeRecord> open) {
    CsvWriter csv(out);
    csv.header({"episode_index", "level", "start", "end", "exit"});
    std::int64_t index = 0;
    auto emit = [&](const EpisodeRecord& e) {
        csv.field(index++).field(config.level_value(e.level)).field(e.start).field(e.end).field(to_string(e.exit));
        csv.end_row();
    };
    for (const auto& e : closed) emit(e);
    if (open && open->length() > 0) emit(*open);
}

} // namespace seqcal
