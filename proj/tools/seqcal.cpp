// seqcal: run calibration and semi-supervised experiments from JSON configs.

#include "seqcal/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

enum ExitCode { ok = 0, check_failed = 1, bad_config = 2, run_failed = 3 };

struct RunFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> replicates;
    unsigned threads = 0;
    bool check = false;
    bool details = false;
    bool quiet = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void add_run_flags(CLI::App& cmd, RunFlags& flags) {
    cmd.add_option("--config", flags.config_path, "JSON config (defaults are used when omitted)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--seed", flags.seed, "Master seed (overrides the config)");
    cmd.add_option("--out", flags.out, "Output directory (overrides the config)");
    cmd.add_option("--replicates", flags.replicates, "Replicate count (overrides the config)")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--threads", flags.threads, "Worker threads, 0 for all cores");
    cmd.add_flag("--check", flags.check, "Evaluate the config's checks; exit 1 if any fails");
    cmd.add_flag("--details", flags.details, "Write per-module exports for replicate 0 under <out>/details");
    cmd.add_flag("-q,--quiet", flags.quiet, "Do not print the summary");
}

int report_checks(std::span<const seqcal::Check> checks, const seqcal::Summary& summary) {
    int failed = 0;
    for (const auto& r : seqcal::evaluate_checks(checks, summary)) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.message << "\n";
        failed += r.passed ? 0 : 1;
    }
    return failed ? check_failed : ok;
}

int run(seqcal::ExperimentKind kind, const RunFlags& flags) {
    seqcal::ExperimentConfig config;
    try {
        config = flags.config_path.empty() ? seqcal::default_config(kind)
                                           : seqcal::parse_config(slurp(flags.config_path));
        if (config.kind != kind)
            throw seqcal::ConfigError("kind", std::string("config is for ") + seqcal::to_string(config.kind) +
                                                  ", not " + seqcal::to_string(kind));
        if (flags.seed) config.seed = *flags.seed;
        if (flags.out) config.out_dir = *flags.out;
        if (flags.replicates) config.replicates = *flags.replicates;
        seqcal::validate(config);
    } catch (const std::exception& e) {
        std::cerr << "seqcal: " << e.what() << "\n";
        return bad_config;
    }

    std::visit(
        [](const auto& p) {
            if constexpr (requires { p.grid.grid(); })
                for (const auto& w : p.grid.grid().validate()) std::cerr << "seqcal: warning: " << w << "\n";
        },
        config.params);

    seqcal::RunReport report;
    try {
        report = seqcal::run_experiment(config, {true, flags.details, flags.threads});
    } catch (const std::exception& e) {
        std::cerr << "seqcal: " << e.what() << "\n";
        return run_failed;
    }
    const auto summary = seqcal::summarize(report);
    if (!flags.quiet) seqcal::write_summary_text(std::cout, report, summary);
    if (!flags.check) return ok;
    if (config.checks.empty()) std::cerr << "seqcal: --check given but the config has no checks\n";
    return report_checks(config.checks, summary);
}

int report_command(const std::vector<std::string>& files, const std::string& out) {
    // Tables sharing config hash and seed belong to one run.
    std::map<std::pair<std::string, std::uint64_t>, std::size_t> index;
    std::vector<seqcal::RunReport> reports;
    try {
        for (const auto& path : files) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw std::runtime_error("cannot read " + path);
            auto part = seqcal::read_table_csv(in);
            const auto key = std::make_pair(part.config_hash, part.seed);
            const auto [it, inserted] = index.try_emplace(key, reports.size());
            if (inserted) {
                reports.push_back(std::move(part));
            } else {
                auto& into = reports[it->second];
                for (auto& t : part.tables) into.tables.push_back(std::move(t));
            }
        }
        const auto summary = seqcal::summarize(reports);
        if (out.empty()) {
            seqcal::write_summary_csv(std::cout, summary);
        } else {
            std::ofstream file(out, std::ios::binary);
            if (!file) throw std::runtime_error("cannot write " + out);
            seqcal::write_summary_csv(file, summary);
        }
    } catch (const std::exception& e) {
        std::cerr << "seqcal: " << e.what() << "\n";
        return bad_config;
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibrated forecasting and semi-supervised learning experiments"};
    app.set_version_flag("--version", seqcal::version());
    bool schema = false;
    app.add_flag("--schema", schema, "Print the CSV layout of every experiment kind and exit");
    app.require_subcommand(0, 1);

    std::map<CLI::App*, seqcal::ExperimentKind> kinds;
    RunFlags flags;
    const std::map<seqcal::ExperimentKind, const char*> help{
        {seqcal::ExperimentKind::calibrate_run, "Grid-walk calibrator against a stochastic source"},
        {seqcal::ExperimentKind::adversary_run, "Grid-walk calibrator against the adaptive adversary"},
        {seqcal::ExperimentKind::wrapper_run, "Partition wrapper around a base predictor"},
        {seqcal::ExperimentKind::semisup_run, "Interval model: combined, labeled-only and unlabeled-only risks"},
        {seqcal::ExperimentKind::pca_run, "Principal component regression on correlated pairs"},
        {seqcal::ExperimentKind::select_run, "Holdout selection among unlabeled-data candidates"},
    };
    for (auto kind : seqcal::all_kinds()) {
        auto* cmd = app.add_subcommand(seqcal::to_string(kind), help.at(kind));
        add_run_flags(*cmd, flags);
        kinds[cmd] = kind;
    }

    std::vector<std::string> files;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Pool result CSVs into one summary");
    report->add_option("files", files, "Table CSVs written by the run commands")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Summary CSV path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    if (schema) {
        std::cout << seqcal::csv_schema();
        return ok;
    }
    if (report->parsed()) return report_command(files, report_out);
    for (const auto& [cmd, kind] : kinds)
        if (cmd->parsed()) return run(kind, flags);
    std::cout << app.help();
    return bad_config;
}
