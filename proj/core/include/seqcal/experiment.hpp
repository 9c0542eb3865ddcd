#pragma once

#include "seqcal/pca.hpp"
#include "seqcal/predictors.hpp"
#include "seqcal/sources.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace seqcal {

const char* version() noexcept;

enum class ExperimentKind { calibrate_run, adversary_run, wrapper_run, semisup_run, pca_run, select_run };

const char* to_string(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_kind(std::string_view name);
std::span<const ExperimentKind> all_kinds() noexcept;

struct GridParams {
    int levels = 10;
    std::int64_t inertia = 1000;
    std::optional<int> initial_level;  // parsing fills in the centre level
    std::optional<double> probe_eps;   // parsing fills in eta
    std::int64_t min_visits = 1000;

    GridConfig grid() const { return {levels, inertia}; }
    bool operator==(const GridParams&) const = default;
};

struct CalibrateParams {
    GridParams grid;
    SourceSpec source = IidUniform{};
    std::int64_t horizon = 100000;
    bool operator==(const CalibrateParams&) const = default;
};

struct AdversaryParams {
    GridParams grid;
    std::int64_t horizon = 200000;
    /// Window of the moving-average forecaster run against the same adversary
    /// for contrast; 0 disables it.
    std::size_t contrast_window = 10;
    bool operator==(const AdversaryParams&) const = default;
};

struct WrapperParams {
    GridParams grid;
    SourceSpec source = Ar2Clamped{0.3, 0.2, 0.1, 0.25, 0.5};
    BaseRule base = Ar2Rule{};
    int cells = 10;
    std::int64_t horizon = 100000;
    bool operator==(const WrapperParams&) const = default;
};

enum class ThresholdMode { default_rule, automatic, fixed };

struct ThresholdSpec {
    ThresholdMode mode = ThresholdMode::default_rule;
    double value = 0.0;  // used by fixed
    bool operator==(const ThresholdSpec&) const = default;
};

struct SemisupParams {
    int intervals = 100;
    double sigma = 1.0;
    double tau = 0.05;
    std::int64_t total = 1000000;  // N
    std::int64_t labeled = 200;    // n
    std::int64_t test_points = 20000;
    ThresholdSpec threshold;
    bool operator==(const SemisupParams&) const = default;
};

struct PcaParams {
    CorrelatedPairModel model;
    std::int64_t train = 200;
    std::int64_t test = 2000;
    std::int64_t unlabeled = 0;
    int components = 5;
    std::optional<double> ridge;
    bool operator==(const PcaParams&) const = default;
};

struct SelectParams {
    int intervals = 50;
    double sigma = 1.0;
    double tau = 0.05;
    std::int64_t total = 100000;
    std::int64_t fit = 100;
    std::int64_t holdout = 500;
    std::int64_t test_points = 20000;
    std::vector<double> multipliers{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
    double regret_tolerance = 0.05;
    bool operator==(const SelectParams&) const = default;
};

using ExperimentParams =
    std::variant<CalibrateParams, AdversaryParams, WrapperParams, SemisupParams, PcaParams, SelectParams>;

/// Assertion on a summary statistic, evaluated with --check.
struct Check {
    std::string table;
    std::string metric;
    std::string stat = "mean";  // mean | se | min | max
    std::string op = "<=";      // < | <= | > | >= | ==
    double value = 0.0;
    std::map<std::string, std::string> where;  // key column filters
    bool operator==(const Check&) const = default;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::calibrate_run;
    std::uint64_t seed = 1;
    int replicates = 1;
    std::string out_dir = ".";
    ExperimentParams params = CalibrateParams{};
    std::vector<Check> checks;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Raised for malformed or out-of-range configuration; `field` names the
/// offending key path when there is one.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : "config field '" + field + "': " + message),
          field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

ExperimentConfig default_config(ExperimentKind kind);

/// Parses the JSON config schema; unknown keys are rejected and defaults
/// filled in.
ExperimentConfig parse_config(std::string_view text);
/// JSON with every field present (defaults echoed).
std::string serialize_config(const ExperimentConfig& config);
/// FNV-1a 64 of the serialized config without out_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
/// Validates ranges; parse_config calls this.
void validate(const ExperimentConfig& config);

/// Long-format result table. Key columns identify a row within a replicate;
/// metric columns are numeric (NaN prints as an empty cell).
struct Table {
    struct Row {
        std::int64_t replicate = 0;
        std::vector<std::string> key_values;
        std::vector<double> values;
    };

    std::string name;
    std::vector<std::string> keys;
    std::vector<std::string> metrics;
    std::vector<Row> rows;

    std::size_t metric_index(std::string_view metric) const;
};

struct RunReport {
    ExperimentKind kind = ExperimentKind::calibrate_run;
    std::string config_hash;
    std::uint64_t seed = 0;
    int replicates = 0;
    std::string version;
    std::vector<Table> tables;

    const Table& table(std::string_view name) const;
};

struct SummaryRow {
    std::string table;
    std::vector<std::string> key_names;
    std::vector<std::string> key_values;
    std::string metric;
    std::int64_t n = 0;
    double mean = 0.0;
    double se = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct Summary {
    ExperimentKind kind = ExperimentKind::calibrate_run;
    std::vector<SummaryRow> rows;

    const SummaryRow* find(std::string_view table, std::string_view metric,
                           const std::map<std::string, std::string>& where = {}) const;
};

/// Per key group and metric: mean, standard error, min and max over the
/// replicates (NaN cells skipped).
Summary summarize(const RunReport& report);
/// Pools several reports of one kind. Means, min and max run over all rows;
/// the standard error is taken between the per-report means. A single
/// report yields its own summary. Mixed kinds throw.
Summary summarize(std::span<const RunReport> reports);

void write_table_csv(std::ostream& out, const RunReport& report, const Table& table);
/// Reads one file written by write_table_csv back as a single-table report.
RunReport read_table_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const Summary& summary);

struct CheckResult {
    Check check;
    bool passed = false;
    std::optional<double> observed;
    std::string message;
};

std::vector<CheckResult> evaluate_checks(std::span<const Check> checks, const Summary& summary);

struct RunOptions {
    bool write_files = true;
    /// Also write per-module exports (audit, episodes, traces, data) for
    /// replicate 0 under <out>/details.
    bool details = false;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Executes all replicates (seed of replicate r is derive_seed(seed, r)) and,
/// when requested, writes <out>/<kind>.<table>.csv, <kind>.summary.csv,
/// <kind>.summary.txt and <kind>.config.json.
RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

void write_summary_text(std::ostream& out, const RunReport& report, const Summary& summary);

/// Column layout of every table an experiment kind writes.
std::string csv_schema(ExperimentKind kind);
std::string csv_schema();

} // namespace seqcal
