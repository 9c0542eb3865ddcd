#include "seqcal/experiment.hpp"

#include "seqcal/audit.hpp"
#include "seqcal/selection.hpp"
#include "seqcal/semisup.hpp"

#include "overloaded.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef SEQCAL_VERSION
#define SEQCAL_VERSION "0.0.0"
#endif

namespace seqcal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double flag(bool b) { return b ? 1.0 : 0.0; }
double opt(const std::optional<double>& v) { return v.value_or(kNaN); }

struct TableDef {
    const char* name;
    std::vector<std::string> keys;
    std::vector<std::string> metrics;
};

const std::vector<std::string> kLevelMetrics{"xi",         "visits",     "edge_count",      "R_Tj",
                                             "deviation",  "bound",      "violations",      "late_violations",
                                             "rarely_visited"};

std::vector<std::string> run_metrics(bool adversary) {
    std::vector<std::string> m{"horizon",         "episodes",         "qualifying_levels",
                               "max_deviation",   "bound",            "bound_holds",
                               "late_violation_fraction", "violation_steps", "absorbed",
                               "absorbed_level",  "r_max_miscalibration"};
    if (adversary) m.push_back("ma_min_late_miscalibration");
    return m;
}

std::vector<TableDef> table_defs(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::calibrate_run:
        return {{"levels", {"level"}, kLevelMetrics}, {"runs", {}, run_metrics(false)}};
    case ExperimentKind::adversary_run:
        return {{"levels", {"level"}, kLevelMetrics}, {"runs", {}, run_metrics(true)}};
    case ExperimentKind::wrapper_run:
        return {{"cells",
                 {"cell"},
                 {"lo", "hi", "steps", "episodes", "qualifying_levels", "max_deviation", "bound_holds",
                  "late_violation_fraction"}},
                {"runs",
                 {},
                 {"horizon", "loss_raw", "loss_wrapped", "loss_ratio", "mean_loss_raw", "mean_loss_wrapped",
                  "all_cells_bound_holds", "max_cell_deviation", "max_cell_late_violation_fraction"}}};
    case ExperimentKind::semisup_run:
        return {{"risks", {"mode"}, {"risk"}},
                {"runs",
                 {},
                 {"intervals", "envelopes", "exact_count", "coverage", "threshold", "min_gap",
                  "support_measure"}}};
    case ExperimentKind::pca_run:
        return {{"fits", {"design"}, {"components", "r2"}}};
    case ExperimentKind::select_run:
        return {{"candidates", {"candidate"}, {"holdout_risk", "test_risk", "chosen"}},
                {"runs",
                 {},
                 {"candidates", "chosen_index", "chosen_holdout_risk", "min_holdout_risk", "chosen_test_risk",
                  "min_test_risk", "regret", "within_tolerance", "holdout_is_min"}}};
    }
    return {};
}

/// Rows produced by one replicate, one vector per table, plus optional
/// detail files (name -> contents).
struct ReplicateResult {
    std::vector<std::vector<Table::Row>> rows;
    std::vector<std::pair<std::string, std::string>> details;
};

class RowSink {
public:
    RowSink(ExperimentKind kind, std::int64_t replicate) : defs_(table_defs(kind)), replicate_(replicate) {
        result_.rows.resize(defs_.size());
    }

    void add(std::size_t table, std::vector<std::string> keys, std::vector<double> values) {
        if (keys.size() != defs_[table].keys.size() || values.size() != defs_[table].metrics.size())
            throw std::logic_error(std::string("row shape mismatch in table ") + defs_[table].name);
        result_.rows[table].push_back({replicate_, std::move(keys), std::move(values)});
    }

    void detail(std::string name, std::string contents) {
        result_.details.emplace_back(std::move(name), std::move(contents));
    }

    ReplicateResult take() { return std::move(result_); }

private:
    std::vector<TableDef> defs_;
    std::int64_t replicate_;
    ReplicateResult result_;
};

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

// ---- calibrate-run / adversary-run ----------------------------------------

void emit_bound(RowSink& sink, const BoundReport& report, const ProbeCalibration& probes,
                   std::optional<double> contrast) {
    for (const auto& level : report.levels) {
        sink.add(0, {std::to_string(level.level)},
                 {level.value, static_cast<double>(level.visits),
                  level.level == 0 ? kNaN : static_cast<double>(level.edge_count), opt(level.edge_mean),
                  opt(level.deviation()), level.bound, static_cast<double>(level.violations),
                  static_cast<double>(level.late_violations), flag(level.rarely_visited)});
    }
    std::vector<double> run{static_cast<double>(report.horizon),
                            static_cast<double>(report.episodes),
                            static_cast<double>(report.qualifying_levels),
                            report.max_deviation,
                            report.bound,
                            flag(report.bound_holds()),
                            report.late_violation_fraction,
                            static_cast<double>(report.violation_steps),
                            flag(report.absorbed_level.has_value()),
                            report.absorbed_level ? static_cast<double>(*report.absorbed_level) : kNaN,
                            probes.max_miscalibration()};
    if (contrast) run.push_back(*contrast);
    sink.add(1, {}, std::move(run));
}

void run_calibration(RowSink& sink, const GridParams& g, const SourceSpec& source, std::int64_t horizon,
                     std::uint64_t seed, bool details, std::optional<std::size_t> contrast_window) {
    const GridConfig grid = g.grid();
    AuditedCalibrator calibrator(grid, g.initial_level, details);
    auto probes = ProbeCalibration::on_grid(grid, g.probe_eps);
    OutcomeStream stream(source, horizon, seed);
    play(stream, calibrator, [&](std::int64_t, double forecast, double outcome) { probes.record(forecast, outcome); });
    const auto report = bound_report(calibrator.audit(), g.min_visits);

    std::optional<double> contrast;
    if (contrast_window) {
        if (*contrast_window == 0) {
            contrast = kNaN;
        } else {
            // A deterministic moving-average forecaster facing the same adversary.
            BasePredictor ma(MovingAverageRule{*contrast_window});
            auto ma_probes = ProbeCalibration::on_grid(grid, g.probe_eps);
            OutcomeStream ma_stream(source, horizon, seed);
            double worst = std::numeric_limits<double>::infinity();
            for (std::int64_t t = 1; !ma_stream.done(); ++t) {
                const double f = ma.forecast(ma_stream.history());
                ma_probes.record(f, ma_stream.next(f));
                if (t > horizon / 2) worst = std::min(worst, ma_probes.max_miscalibration());
            }
            contrast = std::isfinite(worst) ? worst : kNaN;
        }
    }
    emit_bound(sink, report, probes, contrast);

    if (details) {
        sink.detail("audit.csv", render([&](std::ostream& o) { write_audit_csv(o, report); }));
        sink.detail("episodes.csv", render([&](std::ostream& o) {
                        write_episodes_csv(o, grid, calibrator.episodes(), calibrator.calibrator().open_episode());
                    }));
        sink.detail("stream.csv", render([&](std::ostream& o) { write_stream_csv(o, stream.history()); }));
    }
}

// ---- wrapper-run -------------------------------------------------------------

void run_wrapper(RowSink& sink, const WrapperParams& p, std::uint64_t seed, bool details) {
    const GridConfig grid = p.grid.grid();
    const auto edges = uniform_cells(p.cells);
    PartitionWrapper wrapper(BasePredictor(p.base), grid, edges);
    OutcomeStream stream(p.source, p.horizon, seed);
    std::vector<double> raw, wrapped;
    std::vector<TraceRow> trace;
    raw.reserve(static_cast<std::size_t>(p.horizon));
    wrapped.reserve(static_cast<std::size_t>(p.horizon));
    for (std::int64_t t = 1; !stream.done(); ++t) {
        const double f = wrapper.predict(stream.history());
        const double y = stream.next(f);
        wrapper.observe(y);
        raw.push_back(wrapper.last_base_forecast());
        wrapped.push_back(f);
        if (details) trace.push_back({t, wrapper.last_base_forecast(), *wrapper.pinned_cell(), f, y});
    }
    const auto outcomes = stream.history();
    const Pp2Loss loss_raw = loss_pp2(raw, outcomes);
    const Pp2Loss loss_wrapped = loss_pp2(wrapped, outcomes);

    bool all_hold = true;
    double max_dev = 0.0;
    double max_late = 0.0;
    for (int m = 0; m < wrapper.cells(); ++m) {
        const auto report = bound_report(wrapper.cell(m).audit(), p.grid.min_visits);
        all_hold = all_hold && report.bound_holds();
        max_dev = std::max(max_dev, report.max_deviation);
        max_late = std::max(max_late, report.late_violation_fraction);
        const auto i = static_cast<std::size_t>(m);
        sink.add(0, {std::to_string(m)},
                 {edges[i], edges[i + 1], static_cast<double>(report.horizon), static_cast<double>(report.episodes),
                  static_cast<double>(report.qualifying_levels), report.max_deviation, flag(report.bound_holds()),
                  report.late_violation_fraction});
    }
    sink.add(1, {},
             {static_cast<double>(p.horizon), loss_raw.total, loss_wrapped.total,
              loss_raw.total > 0.0 ? loss_wrapped.total / loss_raw.total : kNaN, loss_raw.mean, loss_wrapped.mean,
              flag(all_hold), max_dev, max_late});

    if (details) {
        sink.detail("trace.csv", render([&](std::ostream& o) { write_trace_csv(o, trace); }));
        sink.detail("stream.csv", render([&](std::ostream& o) { write_stream_csv(o, outcomes); }));
    }
}

// ---- semisup-run ---------------------------------------------------------------

void run_semisup(RowSink& sink, const SemisupParams& p, std::uint64_t seed, bool details) {
    const auto model = sample_model(p.intervals, p.sigma, p.tau, derive_seed(seed, 0));
    const auto data = sample_dataset(model, static_cast<std::size_t>(p.labeled), static_cast<std::size_t>(p.total),
                                     derive_seed(seed, 1));
    std::vector<double> sorted = data.unlabeled_x;
    std::sort(sorted.begin(), sorted.end());

    SupportReconstruction rec;
    switch (p.threshold.mode) {
    case ThresholdMode::default_rule: rec = reconstruct_support(sorted); break;
    case ThresholdMode::automatic: rec = reconstruct_support_auto(sorted); break;
    case ThresholdMode::fixed: rec = reconstruct_support(sorted, p.threshold.value); break;
    }

    const auto test_seed = derive_seed(seed, 2);
    const auto n_test = static_cast<std::size_t>(p.test_points);
    for (auto mode : {ClassifierMode::combined, ClassifierMode::labeled_only, ClassifierMode::unlabeled_only})
        sink.add(0, {to_string(mode)}, {estimate_risk(model, make_classifier(data, rec, mode), n_test, test_seed)});
    sink.add(0, {"oracle"}, {estimate_risk(model, oracle_classifier(model), n_test, test_seed)});

    sink.add(1, {},
             {static_cast<double>(p.intervals), static_cast<double>(rec.envelopes.size()),
              flag(rec.envelopes.size() == static_cast<std::size_t>(p.intervals)), rec.coverage(model),
              rec.threshold, model.min_gap(), model.support_measure()});

    if (details) {
        sink.detail("intervals.csv", render([&](std::ostream& o) { write_intervals_csv(o, model); }));
        sink.detail("data.csv", render([&](std::ostream& o) { write_data_csv(o, data); }));
    }
}

// ---- pca-run ---------------------------------------------------------------------

void run_pca(RowSink& sink, const PcaParams& p, std::uint64_t seed) {
    Rng rng(seed);
    const auto train = sample_pairs(p.model, static_cast<std::size_t>(p.train), rng);
    const auto test = sample_pairs(p.model, static_cast<std::size_t>(p.test), rng);
    Eigen::MatrixXd unlabeled;
    RegressionOptions options;
    options.ridge = p.ridge;
    if (p.unlabeled > 0) {
        unlabeled = sample_pairs(p.model, static_cast<std::size_t>(p.unlabeled), rng).x;
        options.unlabeled = &unlabeled;
    }
    for (auto design : {Design::pcs_only, Design::pcs_plus_raw}) {
        const double r2 = regress({design, p.components}, train, test, options);
        sink.add(0, {to_string(design)}, {static_cast<double>(p.components), r2});
    }
}

// ---- select-run ------------------------------------------------------------------

void run_select(RowSink& sink, const SelectParams& p, std::uint64_t seed, bool details) {
    const auto model = sample_model(p.intervals, p.sigma, p.tau, derive_seed(seed, 0));
    const auto labeled = static_cast<std::size_t>(p.fit + p.holdout);
    const auto data = sample_dataset(model, labeled, static_cast<std::size_t>(p.total), derive_seed(seed, 1));

    LabeledSample fit, holdout;
    for (std::size_t i = 0; i < labeled; ++i) {
        auto& s = i < static_cast<std::size_t>(p.fit) ? fit : holdout;
        s.x.push_back(data.labeled_x[i]);
        s.y.push_back(data.labeled_y[i]);
        s.ids.push_back(i);
    }
    std::vector<double> sorted = data.unlabeled_x;
    std::sort(sorted.begin(), sorted.end());

    const auto candidates = build_candidate_set(sorted, fit, p.multipliers);
    const auto selection = select_predictor(candidates, holdout);

    const auto test_seed = derive_seed(seed, 2);
    std::vector<double> test_risks;
    for (const auto& c : candidates.candidates())
        test_risks.push_back(estimate_risk(model, c.predict, static_cast<std::size_t>(p.test_points), test_seed));

    for (std::size_t i = 0; i < candidates.size(); ++i)
        sink.add(0, {candidates[i].name},
                 {selection.holdout_risks[i], test_risks[i], flag(i == selection.chosen)});

    const double min_holdout = *std::min_element(selection.holdout_risks.begin(), selection.holdout_risks.end());
    const double min_test = *std::min_element(test_risks.begin(), test_risks.end());
    const double chosen_test = test_risks[selection.chosen];
    const double regret = chosen_test - min_test;
    sink.add(1, {},
             {static_cast<double>(candidates.size()), static_cast<double>(selection.chosen),
              selection.holdout_risks[selection.chosen], min_holdout, chosen_test, min_test, regret,
              flag(regret <= p.regret_tolerance), flag(selection.holdout_risks[selection.chosen] == min_holdout)});

    if (details) {
        sink.detail("intervals.csv", render([&](std::ostream& o) { write_intervals_csv(o, model); }));
        sink.detail("data.csv", render([&](std::ostream& o) { write_data_csv(o, data); }));
    }
}

ReplicateResult run_replicate(const ExperimentConfig& config, std::int64_t replicate, bool details) {
    RowSink sink(config.kind, replicate);
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(replicate));
    std::visit(detail::Overloaded{
                   [&](const CalibrateParams& p) {
                       run_calibration(sink, p.grid, p.source, p.horizon, seed, details, std::nullopt);
                   },
                   [&](const AdversaryParams& p) {
                       run_calibration(sink, p.grid, AdaptiveAdversary{}, p.horizon, seed, details,
                                       p.contrast_window);
                   },
                   [&](const WrapperParams& p) { run_wrapper(sink, p, seed, details); },
                   [&](const SemisupParams& p) { run_semisup(sink, p, seed, details); },
                   [&](const PcaParams& p) { run_pca(sink, p, seed); },
                   [&](const SelectParams& p) { run_select(sink, p, seed, details); },
               },
               config.params);
    return sink.take();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace

const char* version() noexcept { return SEQCAL_VERSION; }

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    validate(config);
    const auto replicates = static_cast<std::size_t>(config.replicates);
    std::vector<ReplicateResult> results(replicates);
    std::vector<std::exception_ptr> errors(replicates);

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, replicates));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < replicates;) {
            try {
                results[r] = run_replicate(config, static_cast<std::int64_t>(r), options.details && r == 0);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    for (std::size_t r = 0; r < replicates; ++r) {
        if (!errors[r]) continue;
        try {
            std::rethrow_exception(errors[r]);
        } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + std::to_string(r) + ": " + e.what());
        }
    }

    RunReport report;
    report.kind = config.kind;
    report.config_hash = config_hash(config);
    report.seed = config.seed;
    report.replicates = config.replicates;
    report.version = version();
    const auto defs = table_defs(config.kind);
    for (std::size_t t = 0; t < defs.size(); ++t) {
        Table table{defs[t].name, defs[t].keys, defs[t].metrics, {}};
        for (auto& r : results)
            std::move(r.rows[t].begin(), r.rows[t].end(), std::back_inserter(table.rows));
        report.tables.push_back(std::move(table));
    }

    if (options.write_files) {
        namespace fs = std::filesystem;
        const fs::path dir(config.out_dir);
        fs::create_directories(dir);
        const std::string stem = to_string(config.kind);
        for (const auto& table : report.tables)
            write_file(dir / (stem + "." + table.name + ".csv"),
                       render([&](std::ostream& o) { write_table_csv(o, report, table); }));
        const auto summary = summarize(report);
        write_file(dir / (stem + ".summary.csv"), render([&](std::ostream& o) { write_summary_csv(o, summary); }));
        write_file(dir / (stem + ".summary.txt"),
                   render([&](std::ostream& o) { write_summary_text(o, report, summary); }));
        write_file(dir / (stem + ".config.json"), serialize_config(config));
        if (options.details && !results.empty() && !results.front().details.empty()) {
            fs::create_directories(dir / "details");
            for (const auto& [name, contents] : results.front().details) write_file(dir / "details" / name, contents);
        }
    }
    return report;
}

std::string csv_schema(ExperimentKind kind) {
    std::string out;
    for (const auto& def : table_defs(kind)) {
        out += std::string(to_string(kind)) + "." + def.name + ".csv: replicate";
        for (const auto& k : def.keys) out += "," + k;
        for (const auto& m : def.metrics) out += "," + m;
        out += "\n";
    }
    out += std::string(to_string(kind)) + ".summary.csv: table,key,metric,n,mean,se,min,max\n";
    return out;
}

std::string csv_schema() {
    std::string out;
    for (auto kind : all_kinds()) out += csv_schema(kind);
    return out;
}

} // namespace seqcal
