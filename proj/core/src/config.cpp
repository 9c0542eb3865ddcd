#include "seqcal/experiment.hpp"

#include "overloaded.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <utility>

namespace seqcal {

using json = nlohmann::json;
using detail::Overloaded;

namespace {

constexpr std::array kKinds{ExperimentKind::calibrate_run, ExperimentKind::adversary_run,
                            ExperimentKind::wrapper_run,   ExperimentKind::semisup_run,
                            ExperimentKind::pca_run,       ExperimentKind::select_run};

/// Wraps one JSON object: typed getters record which keys were read so that
/// finish() can reject the rest.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    const json* find(std::string_view key) {
        seen_.insert(std::string(key));
        const auto it = j_.find(std::string(key));
        return it == j_.end() ? nullptr : &*it;
    }

    template <class Int>
    void integer(std::string_view key, Int& out, std::optional<std::int64_t> min = std::nullopt) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
        std::int64_t x = 0;
        if (v->is_number_unsigned()) {
            const auto u = v->get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(INT64_MAX)) throw ConfigError(field(key), "value too large");
            x = static_cast<std::int64_t>(u);
        } else {
            x = v->get<std::int64_t>();
        }
        if (min && x < *min)
            throw ConfigError(field(key), "must be >= " + std::to_string(*min) + " (got " + std::to_string(x) + ")");
        if (std::cmp_greater(x, std::numeric_limits<Int>::max()))
            throw ConfigError(field(key), "value too large");
        out = static_cast<Int>(x);
    }

    void unsigned64(std::string_view key, std::uint64_t& out) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
        out = v->get<std::uint64_t>();
    }

    void number(std::string_view key, double& out) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
        out = v->get<double>();
        if (!std::isfinite(out)) throw ConfigError(field(key), "must be finite");
    }

    void boolean(std::string_view key, bool& out) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
        out = v->get<bool>();
    }

    void string(std::string_view key, std::string& out) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_string()) throw ConfigError(field(key), "expected a string");
        out = v->get<std::string>();
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

// ---- sources and base rules ------------------------------------------------

SourceSpec read_source(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    std::string type;
    r.string("type", type);
    SourceSpec spec;
    if (type == "iid-uniform") {
        spec = IidUniform{};
    } else if (type == "iid-beta") {
        IidBeta s;
        r.number("a", s.a);
        r.number("b", s.b);
        spec = s;
    } else if (type == "ar2-clamped") {
        Ar2Clamped s;
        r.number("beta1", s.beta1);
        r.number("beta2", s.beta2);
        r.number("noise", s.noise);
        r.number("intercept", s.intercept);
        r.number("start", s.start);
        spec = s;
    } else if (type == "regime-switch") {
        RegimeSwitch s;
        r.number("low_mean", s.low_mean);
        r.number("high_mean", s.high_mean);
        r.number("switch_prob", s.switch_prob);
        spec = s;
    } else if (type == "adaptive-adversary") {
        spec = AdaptiveAdversary{};
    } else {
        throw ConfigError(r.field("type"), "unknown source type '" + type + "'");
    }
    r.finish();
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    return spec;
}

json write_source(const SourceSpec& spec) {
    json j{{"type", source_name(spec)}};
    std::visit(Overloaded{
                   [](const IidUniform&) {},
                   [&](const IidBeta& s) {
                       j["a"] = s.a;
                       j["b"] = s.b;
                   },
                   [&](const Ar2Clamped& s) {
                       j["beta1"] = s.beta1;
                       j["beta2"] = s.beta2;
                       j["noise"] = s.noise;
                       j["intercept"] = s.intercept;
                       j["start"] = s.start;
                   },
                   [&](const RegimeSwitch& s) {
                       j["low_mean"] = s.low_mean;
                       j["high_mean"] = s.high_mean;
                       j["switch_prob"] = s.switch_prob;
                   },
                   [](const AdaptiveAdversary&) {},
               },
               spec);
    return j;
}

BaseRule read_base(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    std::string type;
    r.string("type", type);
    BaseRule rule;
    if (type == "constant") {
        ConstantRule c;
        r.number("value", c.value);
        require(c.value >= 0.0 && c.value <= 1.0, r.field("value"), "must lie in [0, 1]");
        rule = c;
    } else if (type == "moving-average") {
        MovingAverageRule m;
        r.integer("window", m.window, 1);
        rule = m;
    } else if (type == "ar2") {
        Ar2Rule a;
        r.integer("refit_period", a.refit_period, 3);
        r.number("ridge", a.ridge);
        require(a.ridge >= 0.0, r.field("ridge"), "must be >= 0");
        rule = a;
    } else {
        throw ConfigError(r.field("type"), "unknown base predictor '" + type + "'");
    }
    r.finish();
    return rule;
}

json write_base(const BaseRule& rule) {
    return std::visit(Overloaded{
                          [](const ConstantRule& c) { return json{{"type", "constant"}, {"value", c.value}}; },
                          [](const MovingAverageRule& m) {
                              return json{{"type", "moving-average"}, {"window", m.window}};
                          },
                          [](const Ar2Rule& a) {
                              return json{{"type", "ar2"}, {"refit_period", a.refit_period}, {"ridge", a.ridge}};
                          },
                      },
                      rule);
}

// ---- per-kind parameter blocks ---------------------------------------------

void read_grid(ObjectReader& parent, GridParams& g) {
    if (const json* v = parent.find("grid")) {
        ObjectReader r(*v, parent.field("grid"));
        r.integer("levels", g.levels, 1);
        r.integer("inertia", g.inertia, 1);
        if (r.find("initial_level")) {
            int level = 0;
            r.integer("initial_level", level, 0);
            require(level <= g.levels, r.field("initial_level"), "must lie in 0..levels");
            g.initial_level = level;
        }
        if (r.find("probe_eps")) {
            double eps = 0.0;
            r.number("probe_eps", eps);
            require(eps > 0.0, r.field("probe_eps"), "must be > 0");
            g.probe_eps = eps;
        }
        r.integer("min_visits", g.min_visits, 0);
        r.finish();
    }
    const GridConfig grid = g.grid();
    if (!g.initial_level) g.initial_level = grid.center_level();
    if (!g.probe_eps) g.probe_eps = grid.eta();
}

json write_grid(const GridParams& g) {
    json j{{"levels", g.levels}, {"inertia", g.inertia}, {"min_visits", g.min_visits}};
    if (g.initial_level) j["initial_level"] = *g.initial_level;
    if (g.probe_eps) j["probe_eps"] = *g.probe_eps;
    return j;
}

ExperimentParams read_params(ExperimentKind kind, const json* j, const std::string& path) {
    static const json empty = json::object();
    ObjectReader r(j ? *j : empty, path);
    ExperimentParams out;
    switch (kind) {
    case ExperimentKind::calibrate_run: {
        CalibrateParams p;
        read_grid(r, p.grid);
        if (const json* s = r.find("source")) p.source = read_source(*s, r.field("source"));
        r.integer("horizon", p.horizon, 1);
        out = p;
        break;
    }
    case ExperimentKind::adversary_run: {
        AdversaryParams p;
        read_grid(r, p.grid);
        r.integer("horizon", p.horizon, 1);
        r.integer("contrast_window", p.contrast_window, 0);
        out = p;
        break;
    }
    case ExperimentKind::wrapper_run: {
        WrapperParams p;
        read_grid(r, p.grid);
        if (const json* s = r.find("source")) p.source = read_source(*s, r.field("source"));
        if (const json* b = r.find("base")) p.base = read_base(*b, r.field("base"));
        r.integer("cells", p.cells, 1);
        r.integer("horizon", p.horizon, 1);
        out = p;
        break;
    }
    case ExperimentKind::semisup_run: {
        SemisupParams p;
        r.integer("intervals", p.intervals, 1);
        r.number("sigma", p.sigma);
        r.number("tau", p.tau);
        r.integer("total", p.total, 2);
        r.integer("labeled", p.labeled, 1);
        r.integer("test_points", p.test_points, 1);
        if (const json* t = r.find("threshold")) {
            if (t->is_string() && *t == "default") {
                p.threshold = {ThresholdMode::default_rule, 0.0};
            } else if (t->is_string() && *t == "auto") {
                p.threshold = {ThresholdMode::automatic, 0.0};
            } else if (t->is_number() && t->get<double>() > 0.0) {
                p.threshold = {ThresholdMode::fixed, t->get<double>()};
            } else {
                throw ConfigError(r.field("threshold"), "expected \"default\", \"auto\" or a positive number");
            }
        }
        require(p.sigma > 0.0, r.field("sigma"), "must be > 0");
        require(p.tau > 0.0, r.field("tau"), "must be > 0");
        require(p.labeled <= p.total, r.field("labeled"), "must not exceed total");
        require(p.total - p.labeled >= 2, r.field("total"), "needs at least 2 unlabeled points");
        out = p;
        break;
    }
    case ExperimentKind::pca_run: {
        PcaParams p;
        if (const json* m = r.find("model")) {
            ObjectReader mr(*m, r.field("model"));
            mr.integer("features", p.model.features, 2);
            mr.number("rho", p.model.rho);
            mr.number("beta", p.model.beta);
            mr.number("noise", p.model.noise);
            mr.finish();
            try {
                p.model.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(r.field("model"), e.what());
            }
        }
        r.integer("train", p.train, 2);
        r.integer("test", p.test, 2);
        r.integer("unlabeled", p.unlabeled, 0);
        r.integer("components", p.components, 1);
        require(p.components <= std::min<std::int64_t>(p.model.features, p.train + p.unlabeled),
                r.field("components"), "must not exceed min(features, rows)");
        if (r.find("ridge")) {
            double ridge = 0.0;
            r.number("ridge", ridge);
            require(ridge >= 0.0, r.field("ridge"), "must be >= 0");
            p.ridge = ridge;
        }
        out = p;
        break;
    }
    case ExperimentKind::select_run: {
        SelectParams p;
        r.integer("intervals", p.intervals, 1);
        r.number("sigma", p.sigma);
        r.number("tau", p.tau);
        r.integer("total", p.total, 4);
        r.integer("fit", p.fit, 1);
        r.integer("holdout", p.holdout, 1);
        r.integer("test_points", p.test_points, 1);
        if (const json* m = r.find("multipliers")) {
            if (!m->is_array()) throw ConfigError(r.field("multipliers"), "expected an array of numbers");
            p.multipliers.clear();
            for (const auto& x : *m) {
                if (!x.is_number() || !(x.get<double>() > 0.0))
                    throw ConfigError(r.field("multipliers"), "entries must be positive numbers");
                p.multipliers.push_back(x.get<double>());
            }
        }
        r.number("regret_tolerance", p.regret_tolerance);
        require(p.sigma > 0.0, r.field("sigma"), "must be > 0");
        require(p.tau > 0.0, r.field("tau"), "must be > 0");
        require(p.total - p.fit - p.holdout >= 2, r.field("total"),
                "must leave at least 2 unlabeled points after fit and holdout");
        require(p.regret_tolerance >= 0.0, r.field("regret_tolerance"), "must be >= 0");
        out = p;
        break;
    }
    }
    r.finish();
    return out;
}

json write_params(const ExperimentParams& params) {
    return std::visit(
        Overloaded{
            [](const CalibrateParams& p) {
                return json{{"grid", write_grid(p.grid)}, {"source", write_source(p.source)}, {"horizon", p.horizon}};
            },
            [](const AdversaryParams& p) {
                return json{{"grid", write_grid(p.grid)},
                            {"horizon", p.horizon},
                            {"contrast_window", p.contrast_window}};
            },
            [](const WrapperParams& p) {
                return json{{"grid", write_grid(p.grid)},
                            {"source", write_source(p.source)},
                            {"base", write_base(p.base)},
                            {"cells", p.cells},
                            {"horizon", p.horizon}};
            },
            [](const SemisupParams& p) {
                json t;
                switch (p.threshold.mode) {
                case ThresholdMode::default_rule: t = "default"; break;
                case ThresholdMode::automatic: t = "auto"; break;
                case ThresholdMode::fixed: t = p.threshold.value; break;
                }
                return json{{"intervals", p.intervals},     {"sigma", p.sigma},
                            {"tau", p.tau},                 {"total", p.total},
                            {"labeled", p.labeled},         {"test_points", p.test_points},
                            {"threshold", t}};
            },
            [](const PcaParams& p) {
                json j{{"model",
                        {{"features", p.model.features},
                         {"rho", p.model.rho},
                         {"beta", p.model.beta},
                         {"noise", p.model.noise}}},
                       {"train", p.train},
                       {"test", p.test},
                       {"unlabeled", p.unlabeled},
                       {"components", p.components}};
                if (p.ridge) j["ridge"] = *p.ridge;
                return j;
            },
            [](const SelectParams& p) {
                return json{{"intervals", p.intervals},     {"sigma", p.sigma},
                            {"tau", p.tau},                 {"total", p.total},
                            {"fit", p.fit},                 {"holdout", p.holdout},
                            {"test_points", p.test_points}, {"multipliers", p.multipliers},
                            {"regret_tolerance", p.regret_tolerance}};
            },
        },
        params);
}

Check read_check(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    Check c;
    r.string("table", c.table);
    r.string("metric", c.metric);
    r.string("stat", c.stat);
    r.string("op", c.op);
    const json* v = r.find("value");
    if (!v || !v->is_number()) throw ConfigError(r.field("value"), "expected a number");
    c.value = v->get<double>();
    if (const json* w = r.find("where")) {
        if (!w->is_object()) throw ConfigError(r.field("where"), "expected an object of strings");
        for (const auto& [key, value] : w->items()) {
            if (!value.is_string()) throw ConfigError(r.field("where") + "." + key, "expected a string");
            c.where[key] = value.get<std::string>();
        }
    }
    r.finish();
    require(!c.table.empty(), r.field("table"), "required");
    require(!c.metric.empty(), r.field("metric"), "required");
    require(c.stat == "mean" || c.stat == "se" || c.stat == "min" || c.stat == "max", r.field("stat"),
            "expected mean, se, min or max");
    require(c.op == "<" || c.op == "<=" || c.op == ">" || c.op == ">=" || c.op == "==", r.field("op"),
            "expected <, <=, >, >= or ==");
    return c;
}

json write_check(const Check& c) {
    json j{{"table", c.table}, {"metric", c.metric}, {"stat", c.stat}, {"op", c.op}, {"value", c.value}};
    if (!c.where.empty()) j["where"] = c.where;
    return j;
}

json to_json(const ExperimentConfig& config, bool with_out_dir) {
    json j{{"kind", to_string(config.kind)},
           {"seed", config.seed},
           {"replicates", config.replicates},
           {"params", write_params(config.params)}};
    if (with_out_dir) j["out"] = config.out_dir;
    json checks = json::array();
    for (const auto& c : config.checks) checks.push_back(write_check(c));
    j["checks"] = checks;
    return j;
}

} // namespace

const char* to_string(ExperimentKind kind) noexcept {
    switch (kind) {
    case ExperimentKind::calibrate_run: return "calibrate-run";
    case ExperimentKind::adversary_run: return "adversary-run";
    case ExperimentKind::wrapper_run: return "wrapper-run";
    case ExperimentKind::semisup_run: return "semisup-run";
    case ExperimentKind::pca_run: return "pca-run";
    case ExperimentKind::select_run: return "select-run";
    }
    return "?";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
    for (auto kind : kKinds)
        if (name == to_string(kind)) return kind;
    return std::nullopt;
}

std::span<const ExperimentKind> all_kinds() noexcept { return kKinds; }

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig config;
    config.kind = kind;
    config.params = read_params(kind, nullptr, "params");
    return config;
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    ObjectReader r(j, "");
    ExperimentConfig config;

    std::string kind;
    r.string("kind", kind);
    if (kind.empty()) throw ConfigError("kind", "required");
    const auto parsed = parse_kind(kind);
    if (!parsed) throw ConfigError("kind", "unknown experiment kind '" + kind + "'");
    config.kind = *parsed;

    r.unsigned64("seed", config.seed);
    r.integer("replicates", config.replicates, 1);
    r.string("out", config.out_dir);
    config.params = read_params(config.kind, r.find("params"), "params");
    if (const json* checks = r.find("checks")) {
        if (!checks->is_array()) throw ConfigError("checks", "expected an array");
        for (std::size_t i = 0; i < checks->size(); ++i)
            config.checks.push_back(read_check((*checks)[i], "checks[" + std::to_string(i) + "]"));
    }
    r.finish();
    validate(config);
    return config;
}

std::string serialize_config(const ExperimentConfig& config) { return to_json(config, true).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) {
    const std::string canonical = to_json(config, false).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void validate(const ExperimentConfig& config) {
    if (config.replicates < 1) throw ConfigError("replicates", "must be >= 1");
    const auto index = static_cast<std::size_t>(config.params.index());
    if (kKinds[index] != config.kind) throw ConfigError("params", "parameter block does not match the kind");
    // re-run the reader's range checks on the in-memory values
    const json j = write_params(config.params);
    (void)read_params(config.kind, &j, "params");
}

} // namespace seqcal
