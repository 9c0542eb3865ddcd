#include <doctest.h>

#include "seqcal/experiment.hpp"

#include <sstream>

using namespace seqcal;

namespace {

std::string field_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

std::string table_csv(const RunReport& r, std::string_view name) {
    std::ostringstream out;
    write_table_csv(out, r, r.table(name));
    return out.str();
}

ExperimentConfig small(ExperimentKind kind) {
    auto c = default_config(kind);
    c.replicates = 3;
    std::visit(
        [](auto& p) {
            if constexpr (requires { p.horizon; }) p.horizon = 3000;
            if constexpr (requires { p.total; }) p.total = 5000;
            if constexpr (requires { p.test_points; }) p.test_points = 500;
            if constexpr (requires { p.labeled; }) p.labeled = 50;
            if constexpr (requires { p.test; }) p.test = 100;
        },
        c.params);
    return c;
}

} // namespace

TEST_CASE("minimal calibrate-run config gets defaults") {
    const auto c = parse_config(R"({"kind": "calibrate-run", "params": {"grid": {"levels": 10, "inertia": 1000}}})");
    CHECK(c.kind == ExperimentKind::calibrate_run);
    const auto& p = std::get<CalibrateParams>(c.params);
    CHECK(p.grid.levels == 10);
    CHECK(p.grid.initial_level == 5);
    CHECK(*p.grid.probe_eps == 0.05);
    CHECK(p.horizon == 100000);
    CHECK(std::holds_alternative<IidUniform>(p.source));
    CHECK(c.seed == 1);
    CHECK(c.replicates == 1);

    const auto text = serialize_config(c);
    CHECK(text.find("\"initial_level\": 5") != std::string::npos);
    CHECK(text.find("\"probe_eps\": 0.05") != std::string::npos);
}

TEST_CASE("config errors name the field") {
    CHECK(field_of(R"({"kind": "calibrate-run", "params": {"grid": {"levels": -1}}})") == "params.grid.levels");
    CHECK(field_of(R"({"kind": "calibrate-run", "foo": 1})") == "foo");
    CHECK(field_of(R"({"kind": "calibrate-run", "params": {"grid": {"foo": 1}}})") == "params.grid.foo");
    CHECK(field_of(R"({"kind": "wrapper-run", "params": {"source": {"type": "ar2-clamped", "noise": -1}}})") ==
          "params.source");
    CHECK(field_of(R"({"kind": "calibrate-run", "params": {"horizon": 1.5}})") == "params.horizon");
    CHECK(field_of(R"({"kind": "nope"})") == "kind");
    CHECK(field_of(R"({"seed": 3})") == "kind");
    CHECK(field_of(R"({"kind": "semisup-run", "params": {"labeled": 10, "total": 5}})") == "params.labeled");
    CHECK(field_of(R"({"kind": "pca-run", "params": {"components": 60}})") == "params.components");
    CHECK(field_of(R"({"kind": "pca-run", "checks": [{"table": "fits", "metric": "r2", "op": "~", "value": 1}]})") ==
          "checks[0].op");
    CHECK(field_of(R"({"kind": "calibrate-run", "params": {"grid": {"levels": 4, "initial_level": 5}}})") ==
          "params.grid.initial_level");

    try {
        parse_config(R"({"kind": "calibrate-run", "params": {"grid": {"levels": -1}}})");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("config field 'params.grid.levels'") == 0);
    }
}

TEST_CASE("syntax errors report the position") {
    try {
        parse_config("{\"kind\": \"calibrate-run\",, }");
        FAIL("accepted malformed JSON");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("at byte 26") != std::string::npos);
    }
}

TEST_CASE("parse, serialize, parse is the identity") {
    for (auto kind : all_kinds()) {
        auto c = default_config(kind);
        c.seed = 0xFFFFFFFFFFFFFFF1ULL;
        c.replicates = 7;
        c.out_dir = "some/dir";
        c.checks.push_back({"runs", "m", "max", ">=", 0.25, {{"k", "v"}}});
        const auto again = parse_config(serialize_config(c));
        CHECK(again == c);
        CHECK(serialize_config(again) == serialize_config(c));
    }
    const auto w = parse_config(R"({"kind": "wrapper-run", "params": {
        "source": {"type": "regime-switch", "switch_prob": 0.01},
        "base": {"type": "moving-average", "window": 7}}})");
    CHECK(parse_config(serialize_config(w)) == w);
    const auto s = parse_config(R"({"kind": "semisup-run", "params": {"threshold": 0.001}})");
    CHECK(parse_config(serialize_config(s)) == s);
    CHECK(std::get<SemisupParams>(s.params).threshold.mode == ThresholdMode::fixed);
}

TEST_CASE("config hash ignores the output directory only") {
    auto a = default_config(ExperimentKind::pca_run);
    auto b = a;
    b.out_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("kind names") {
    for (auto kind : all_kinds()) CHECK(parse_kind(to_string(kind)) == kind);
    CHECK_FALSE(parse_kind("report"));
}

TEST_CASE("runs are deterministic and thread-independent") {
    for (auto kind : all_kinds()) {
        const auto c = small(kind);
        const auto one = run_experiment(c, {false, false, 1});
        const auto many = run_experiment(c, {false, false, 3});
        REQUIRE(one.tables.size() == many.tables.size());
        for (const auto& t : one.tables) CHECK(table_csv(one, t.name) == table_csv(many, t.name));
    }
}

TEST_CASE("adding replicates leaves earlier rows unchanged") {
    auto c = small(ExperimentKind::select_run);
    const auto two = run_experiment(c, {false, false, 1});
    c.replicates = 5;
    const auto five = run_experiment(c, {false, false, 1});
    const auto& a = two.table("candidates");
    const auto& b = five.table("candidates");
    REQUIRE(b.rows.size() > a.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].key_values == b.rows[i].key_values);
        CHECK(a.rows[i].values == b.rows[i].values);
    }
}

TEST_CASE("report tables carry the expected rows") {
    auto c = small(ExperimentKind::adversary_run);
    c.replicates = 1;
    const auto r = run_experiment(c, {false});
    CHECK(r.table("levels").rows.size() == 11);
    CHECK(r.table("runs").rows.size() == 1);
    CHECK(r.table("levels").metric_index("R_Tj") == 3);

    auto s = small(ExperimentKind::semisup_run);
    s.replicates = 1;
    const auto rs = run_experiment(s, {false});
    std::vector<std::string> modes;
    for (const auto& row : rs.table("risks").rows) modes.push_back(row.key_values[0]);
    CHECK(modes == std::vector<std::string>{"combined", "labeled_only", "unlabeled_only", "oracle"});
    CHECK(rs.table("risks").rows[2].values[0] == 0.5);
}

TEST_CASE("table CSV round trip") {
    const auto r = run_experiment(small(ExperimentKind::wrapper_run), {false});
    for (const auto& t : r.tables) {
        const auto text = table_csv(r, t.name);
        std::istringstream in(text);
        const auto back = read_table_csv(in);
        CHECK(back.kind == r.kind);
        CHECK(back.config_hash == r.config_hash);
        CHECK(back.seed == r.seed);
        CHECK(table_csv(back, t.name) == text);
    }
}

TEST_CASE("summaries") {
    const auto r = run_experiment(small(ExperimentKind::pca_run), {false});
    const auto own = summarize(r);
    const auto pooled_one = summarize(std::vector<RunReport>{r});
    REQUIRE(own.rows.size() == pooled_one.rows.size());
    for (std::size_t i = 0; i < own.rows.size(); ++i) {
        CHECK(own.rows[i].mean == pooled_one.rows[i].mean);
        CHECK(own.rows[i].n == pooled_one.rows[i].n);
    }

    const auto twice = summarize(std::vector<RunReport>{r, r});
    for (const auto& row : twice.rows) {
        CHECK(row.se == 0.0);
        CHECK(row.n == 6);
    }

    const auto other = run_experiment(small(ExperimentKind::calibrate_run), {false});
    CHECK_THROWS_AS(summarize(std::vector<RunReport>{r, other}), std::invalid_argument);

    const auto* r2 = own.find("fits", "r2", {{"design", "pcs_plus_raw"}});
    REQUIRE(r2);
    CHECK(r2->n == 3);
    CHECK(r2->min <= r2->mean);
    CHECK(r2->mean <= r2->max);
    CHECK_FALSE(own.find("fits", "r2", {{"design", "nope"}}));
}

TEST_CASE("summary standard error") {
    RunReport r;
    r.kind = ExperimentKind::pca_run;
    r.tables.push_back({"t", {}, {"m"}, {{0, {}, {1.0}}, {1, {}, {3.0}}, {2, {}, {std::nan("")}}}});
    const auto s = summarize(r);
    REQUIRE(s.rows.size() == 1);
    CHECK(s.rows[0].n == 2);
    CHECK(s.rows[0].mean == 2.0);
    CHECK(s.rows[0].se == doctest::Approx(1.0));
    std::ostringstream out;
    write_summary_csv(out, s);
    CHECK(out.str() == "table,key,metric,n,mean,se,min,max\nt,,m,2,2,1,1,3\n");
}

TEST_CASE("embedded checks") {
    const auto r = run_experiment(small(ExperimentKind::pca_run), {false});
    const auto s = summarize(r);
    const std::vector<Check> checks{
        {"fits", "r2", "mean", "<", 0.1, {{"design", "pcs_only"}}},
        {"fits", "r2", "min", ">=", 0.8, {{"design", "pcs_plus_raw"}}},
        {"fits", "r2", "mean", ">", 2.0, {{"design", "pcs_plus_raw"}}},
        {"fits", "missing", "mean", ">", 0.0, {}},
    };
    const auto results = evaluate_checks(checks, s);
    CHECK(results[0].passed);
    CHECK(results[1].passed);
    CHECK_FALSE(results[2].passed);
    CHECK_FALSE(results[3].passed);
    CHECK_FALSE(results[3].observed);
}

TEST_CASE("schema lists every table") {
    const auto schema = csv_schema();
    CHECK(schema.find("semisup-run.risks.csv: replicate,mode,risk") != std::string::npos);
    CHECK(schema.find("pca-run.fits.csv: replicate,design,components,r2") != std::string::npos);
}
