#include "seqcal/csv.hpp"
#include "seqcal/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace seqcal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    if (text.empty()) return out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_cell(const std::string& cell) {
    if (cell.empty()) return kNaN;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw std::runtime_error("report: not a number: '" + cell + "'");
    return v;
}

struct Moments {
    std::int64_t n = 0;
    double sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    std::vector<double> values;

    void add(double v) {
        if (std::isnan(v)) return;
        ++n;
        sum += v;
        min = std::min(min, v);
        max = std::max(max, v);
        values.push_back(v);
    }
    double mean() const { return n ? sum / static_cast<double>(n) : kNaN; }
    double se() const {
        if (n < 2) return kNaN;
        const double m = mean();
        double ss = 0.0;
        for (double v : values) ss += (v - m) * (v - m);
        return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

struct GroupKey {
    std::string table;
    std::vector<std::string> key_values;
    std::string metric;
    bool operator==(const GroupKey&) const = default;
};

/// Groups in first-appearance order; linear lookup keeps the code short and
/// the group counts are small.
struct Groups {
    std::vector<GroupKey> keys;
    std::vector<std::vector<std::string>> key_names;
    std::vector<Moments> moments;

    Moments& at(const GroupKey& key, const std::vector<std::string>& names) {
        for (std::size_t i = keys.size(); i-- > 0;)
            if (keys[i] == key) return moments[i];
        keys.push_back(key);
        key_names.push_back(names);
        moments.emplace_back();
        return moments.back();
    }
};

void collect(const RunReport& report, Groups& groups) {
    for (const auto& table : report.tables)
        for (const auto& row : table.rows)
            for (std::size_t m = 0; m < table.metrics.size(); ++m)
                groups.at({table.name, row.key_values, table.metrics[m]}, table.keys).add(row.values[m]);
}

bool compare(double observed, const std::string& op, double value) {
    if (op == "<") return observed < value;
    if (op == "<=") return observed <= value;
    if (op == ">") return observed > value;
    if (op == ">=") return observed >= value;
    if (op == "==") return observed == value;
    return false;
}

std::string key_label(const SummaryRow& row) {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < row.key_names.size(); ++i)
        parts.push_back(row.key_names[i] + "=" + row.key_values[i]);
    return join(parts, ';');
}

} // namespace

std::size_t Table::metric_index(std::string_view metric) const {
    const auto it = std::find(metrics.begin(), metrics.end(), metric);
    if (it == metrics.end()) throw std::out_of_range("table " + name + ": no metric " + std::string(metric));
    return static_cast<std::size_t>(it - metrics.begin());
}

const Table& RunReport::table(std::string_view name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::out_of_range("report: no table " + std::string(name));
}

const SummaryRow* Summary::find(std::string_view table, std::string_view metric,
                                const std::map<std::string, std::string>& where) const {
    for (const auto& row : rows) {
        if (row.table != table || row.metric != metric) continue;
        bool match = true;
        for (const auto& [key, value] : where) {
            const auto it = std::find(row.key_names.begin(), row.key_names.end(), key);
            if (it == row.key_names.end() ||
                row.key_values[static_cast<std::size_t>(it - row.key_names.begin())] != value) {
                match = false;
                break;
            }
        }
        if (match) return &row;
    }
    return nullptr;
}

Summary summarize(const RunReport& report) {
    Groups groups;
    collect(report, groups);
    Summary summary;
    summary.kind = report.kind;
    for (std::size_t i = 0; i < groups.keys.size(); ++i) {
        const auto& g = groups.keys[i];
        const auto& m = groups.moments[i];
        summary.rows.push_back({g.table, groups.key_names[i], g.key_values, g.metric, m.n, m.mean(), m.se(),
                                m.n ? m.min : kNaN, m.n ? m.max : kNaN});
    }
    return summary;
}

Summary summarize(std::span<const RunReport> reports) {
    if (reports.empty()) throw std::invalid_argument("summarize: no reports");
    for (const auto& r : reports)
        if (r.kind != reports.front().kind) throw std::invalid_argument("summarize: reports of mixed kinds");
    if (reports.size() == 1) return summarize(reports.front());

    Groups pooled;
    for (const auto& r : reports) collect(r, pooled);
    // per-report means of every group, in pooled order
    std::vector<Moments> between(pooled.keys.size());
    for (const auto& r : reports) {
        Groups own;
        collect(r, own);
        for (std::size_t i = 0; i < own.keys.size(); ++i) {
            const auto it = std::find(pooled.keys.begin(), pooled.keys.end(), own.keys[i]);
            between[static_cast<std::size_t>(it - pooled.keys.begin())].add(own.moments[i].mean());
        }
    }
    Summary summary;
    summary.kind = reports.front().kind;
    for (std::size_t i = 0; i < pooled.keys.size(); ++i) {
        const auto& g = pooled.keys[i];
        const auto& m = pooled.moments[i];
        summary.rows.push_back({g.table, pooled.key_names[i], g.key_values, g.metric, m.n, m.mean(),
                                between[i].se(), m.n ? m.min : kNaN, m.n ? m.max : kNaN});
    }
    return summary;
}

void write_table_csv(std::ostream& out, const RunReport& report, const Table& table) {
    out << "# seqcal report\n"
        << "# kind=" << to_string(report.kind) << "\n"
        << "# table=" << table.name << "\n"
        << "# keys=" << join(table.keys, ',') << "\n"
        << "# config_hash=" << report.config_hash << "\n"
        << "# seed=" << report.seed << "\n"
        << "# replicates=" << report.replicates << "\n"
        << "# version=" << report.version << "\n";
    CsvWriter csv(out);
    std::vector<std::string> header{"replicate"};
    header.insert(header.end(), table.keys.begin(), table.keys.end());
    header.insert(header.end(), table.metrics.begin(), table.metrics.end());
    csv.header(header);
    for (const auto& row : table.rows) {
        csv.field(row.replicate);
        for (const auto& k : row.key_values) csv.field(k);
        for (double v : row.values) csv.field(v);
        csv.end_row();
    }
}

RunReport read_table_csv(std::istream& in) {
    RunReport report;
    Table table;
    std::map<std::string, std::string> meta;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
            continue;
        }
        auto cells = split_csv_line(line);
        if (!have_header) {
            if (cells.empty() || cells.front() != "replicate")
                throw std::runtime_error("report: header must start with 'replicate'");
            const auto it = meta.find("keys");
            if (it == meta.end()) throw std::runtime_error("report: missing '# keys=' line");
            table.keys = split(it->second, ',');
            if (cells.size() < 1 + table.keys.size()) throw std::runtime_error("report: header too short");
            table.metrics.assign(cells.begin() + 1 + static_cast<std::ptrdiff_t>(table.keys.size()), cells.end());
            have_header = true;
            continue;
        }
        if (cells.size() != 1 + table.keys.size() + table.metrics.size())
            throw std::runtime_error("report: row has " + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(1 + table.keys.size() + table.metrics.size()));
        Table::Row row;
        row.replicate = static_cast<std::int64_t>(parse_cell(cells[0]));
        for (std::size_t k = 0; k < table.keys.size(); ++k) row.key_values.push_back(cells[1 + k]);
        for (std::size_t m = 0; m < table.metrics.size(); ++m)
            row.values.push_back(parse_cell(cells[1 + table.keys.size() + m]));
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error("report: no header row");
    const auto kind = parse_kind(meta["kind"]);
    if (!kind) throw std::runtime_error("report: unknown kind '" + meta["kind"] + "'");
    report.kind = *kind;
    table.name = meta["table"];
    report.config_hash = meta["config_hash"];
    report.version = meta["version"];
    if (!meta["seed"].empty()) report.seed = std::stoull(meta["seed"]);
    if (!meta["replicates"].empty()) report.replicates = std::stoi(meta["replicates"]);
    report.tables.push_back(std::move(table));
    return report;
}

void write_summary_csv(std::ostream& out, const Summary& summary) {
    CsvWriter csv(out);
    csv.header({"table", "key", "metric", "n", "mean", "se", "min", "max"});
    for (const auto& row : summary.rows) {
        csv.field(row.table).field(key_label(row)).field(row.metric).field(row.n);
        csv.field(row.mean).field(row.se).field(row.min).field(row.max);
        csv.end_row();
    }
}

std::vector<CheckResult> evaluate_checks(std::span<const Check> checks, const Summary& summary) {
    std::vector<CheckResult> results;
    for (const auto& check : checks) {
        CheckResult r{check, false, std::nullopt, {}};
        const SummaryRow* row = summary.find(check.table, check.metric, check.where);
        if (!row) {
            r.message = "no summary row for " + check.table + "." + check.metric;
        } else {
            double v = row->mean;
            if (check.stat == "se") v = row->se;
            else if (check.stat == "min") v = row->min;
            else if (check.stat == "max") v = row->max;
            r.observed = v;
            r.passed = !std::isnan(v) && compare(v, check.op, check.value);
            r.message = check.stat + "(" + check.table + "." + check.metric +
                        (row->key_names.empty() ? "" : "[" + key_label(*row) + "]") + ") = " + format_double(v) +
                        " " + check.op + " " + format_double(check.value);
        }
        results.push_back(std::move(r));
    }
    return results;
}

void write_summary_text(std::ostream& out, const RunReport& report, const Summary& summary) {
    out << "seqcal " << report.version << "  " << to_string(report.kind) << "\n"
        << "config " << report.config_hash << "  seed " << report.seed << "  replicates " << report.replicates
        << "\n";
    auto cell = [](double v) {
        std::ostringstream s;
        s.precision(5);
        s << v;
        return s.str();
    };
    // one line per key group with the mean of every metric; se in brackets
    // when there are several replicates
    std::size_t i = 0;
    while (i < summary.rows.size()) {
        const std::string& table = summary.rows[i].table;
        std::vector<std::string> metrics;
        std::size_t j = i;
        while (j < summary.rows.size() && summary.rows[j].table == table) {
            if (std::find(metrics.begin(), metrics.end(), summary.rows[j].metric) == metrics.end())
                metrics.push_back(summary.rows[j].metric);
            ++j;
        }
        const bool with_keys = !summary.rows[i].key_names.empty();
        std::vector<std::vector<std::string>> grid;  // header row first
        grid.push_back({with_keys ? join(summary.rows[i].key_names, ',') : std::string()});
        grid.front().insert(grid.front().end(), metrics.begin(), metrics.end());
        for (std::size_t k = i; k < j; k += metrics.size()) {
            std::vector<std::string> line{join(summary.rows[k].key_values, ',')};
            for (std::size_t m = 0; m < metrics.size() && k + m < j; ++m) {
                const auto& row = summary.rows[k + m];
                std::string text = cell(row.mean);
                if (row.n > 1 && !std::isnan(row.se)) text += " (" + cell(row.se) + ")";
                line.push_back(std::move(text));
            }
            grid.push_back(std::move(line));
        }
        std::vector<std::size_t> widths(metrics.size() + 1, 0);
        for (const auto& line : grid)
            for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
        out << "\n[" << table << "]\n";
        for (const auto& line : grid) {
            if (with_keys) out << std::left << std::setw(static_cast<int>(widths[0])) << line[0];
            for (std::size_t c = 1; c < line.size(); ++c)
                out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << line[c];
            out << "\n";
        }
        i = j;
    }
}

} // namespace seqcal
