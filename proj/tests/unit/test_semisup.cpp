#include <doctest.h>

#include "seqcal/semisup.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace seqcal;

TEST_CASE("injected draws: one interval, one gap") {
    const std::vector<double> u{1.0}, v{1.0};
    const auto m = model_from_draws(u, v, {1});
    CHECK(m.a[0] == 0.5);
    CHECK(m.b[0] == 1.0);
    CHECK(m.support_measure() == 0.5);
    CHECK(m.interval_of(0.75) == std::optional<std::size_t>(0));
    CHECK_FALSE(m.interval_of(0.5));
    CHECK_FALSE(m.interval_of(0.25));
}

TEST_CASE("draw validation") {
    const std::vector<double> one{1.0}, two{1.0, 1.0}, bad{0.0};
    CHECK_THROWS(model_from_draws(one, two, {1}));
    CHECK_THROWS(model_from_draws(bad, one, {1}));
    CHECK_THROWS(model_from_draws(one, one, {2}));
    CHECK_THROWS(sample_model(0, 1.0, 0.05, 1));
    CHECK_THROWS(sample_model(10, 0.0, 0.05, 1));
    CHECK_THROWS(sample_model(10, 1.0, -1.0, 1));
}

TEST_CASE("tiling identity and ordering") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto m = sample_model(1 + static_cast<int>(seed % 37), 1.0, 0.05, seed);
        double total = m.a.front();
        for (std::size_t j = 0; j < m.a.size(); ++j) {
            REQUIRE(m.a[j] < m.b[j]);
            if (j + 1 < m.a.size()) {
                REQUIRE(m.b[j] < m.a[j + 1]);
                total += m.a[j + 1] - m.b[j];
            }
            total += m.b[j] - m.a[j];
        }
        REQUIRE(m.a.front() > 0.0);
        REQUIRE(m.b.back() == 1.0);
        REQUIRE(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("mean support measure matches sigma / (sigma + tau)") {
    double sum = 0.0;
    for (std::uint64_t r = 0; r < 1000; ++r) sum += sample_model(10, 1.0, 0.05, 1000 + r).support_measure();
    CHECK(std::abs(sum / 1000.0 - 1.0 / 1.05) < 0.01);
}

TEST_CASE("dataset support membership and label purity") {
    const auto m = sample_model(20, 1.0, 0.05, 3);
    const auto d = sample_dataset(m, 500, 1000000, 4);
    REQUIRE(d.labeled_x.size() == 500);
    REQUIRE(d.unlabeled_x.size() == 999500);
    for (double x : d.unlabeled_x) REQUIRE(m.interval_of(x));
    for (std::size_t i = 0; i < d.labeled_x.size(); ++i)
        REQUIRE(d.labeled_y[i] == m.p[*m.interval_of(d.labeled_x[i])]);
    CHECK_THROWS(sample_dataset(m, 11, 10, 1));
    CHECK_THROWS(sample_dataset(m, 0, 10, 1));
}

TEST_CASE("interval masses agree with lengths within three standard errors") {
    const auto m = sample_model(8, 1.0, 0.05, 21);
    const std::size_t n = 200000;
    Rng rng(22);
    const auto xs = sample_covariates(m, n, rng);
    std::vector<double> hits(8, 0.0);
    for (double x : xs) hits[*m.interval_of(x)] += 1.0;
    for (std::size_t j = 0; j < 8; ++j) {
        const double p = (m.b[j] - m.a[j]) / m.support_measure();
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        CHECK(std::abs(hits[j] / static_cast<double>(n) - p) < 3.0 * se);
    }
}

TEST_CASE("reconstruction on hand-made points") {
    const std::vector<double> xs{0.10, 0.11, 0.12, 0.50, 0.51};
    const auto r = reconstruct_support(xs, 0.1);
    REQUIRE(r.envelopes.size() == 2);
    CHECK(r.envelopes[0].lo == 0.10);
    CHECK(r.envelopes[0].hi == 0.12);
    CHECK(r.envelopes[0].count == 3);
    CHECK(r.envelopes[1].lo == 0.50);
    CHECK(r.envelopes[1].hi == 0.51);
    CHECK(reconstruct_support(xs, 1.0).envelopes.size() == 1);
    CHECK_THROWS(reconstruct_support(std::vector<double>{0.3}, 0.1));
    CHECK_THROWS(reconstruct_support(std::vector<double>{0.3, 0.1}, 0.1));
    CHECK_THROWS(reconstruct_support(xs, 0.0));
    CHECK(r.envelope_of(0.115) == std::optional<std::size_t>(0));
    CHECK_FALSE(r.envelope_of(0.3));
    CHECK_FALSE(r.envelope_of(0.05));
}

TEST_CASE("default threshold") {
    CHECK(default_spacing_threshold(100000) == doctest::Approx(2.0 * std::log(1e5) / 1e5));
    CHECK_THROWS(default_spacing_threshold(1));
}

TEST_CASE("envelopes are sound when every gap exceeds the threshold") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto m = sample_model(10, 1.0, 0.05, seed);
        auto d = sample_dataset(m, 1, 100000, seed + 1000);
        std::sort(d.unlabeled_x.begin(), d.unlabeled_x.end());
        const auto r = reconstruct_support(d.unlabeled_x);
        for (std::size_t e = 0; e + 1 < r.envelopes.size(); ++e) REQUIRE(r.envelopes[e].hi < r.envelopes[e + 1].lo);
        if (m.min_gap() <= r.threshold) continue;
        ++checked;
        for (const auto& e : r.envelopes) {
            const auto j = m.interval_of(e.lo);
            REQUIRE(j);
            REQUIRE(e.hi < m.b[*j]);
        }
    }
    CHECK(checked > 10);
}

TEST_CASE("automatic threshold separates a clear two-cluster sample") {
    Rng rng(12);
    std::vector<double> xs;
    for (int i = 0; i < 5000; ++i) xs.push_back(rng.uniform(0.0, 0.4));
    for (int i = 0; i < 5000; ++i) xs.push_back(rng.uniform(0.6, 1.0));
    std::sort(xs.begin(), xs.end());
    const auto r = reconstruct_support_auto(xs);
    CHECK(r.envelopes.size() == 2);
}

TEST_CASE("classifier rules") {
    const std::vector<double> ux{0.10, 0.11, 0.12, 0.50, 0.51, 0.52};
    const auto r = reconstruct_support(ux, 0.1);
    DataSet d;
    d.labeled_x = {0.11, 0.115};
    d.labeled_y = {1, 0};
    d.unlabeled_x = ux;

    CHECK(classify(d, r, ClassifierMode::combined, 0.105) == 1.0);  // first labeled point decides
    CHECK(classify(d, r, ClassifierMode::combined, 0.505) == 0.5);  // no labeled point in the envelope
    CHECK(classify(d, r, ClassifierMode::combined, 0.3) == 0.5);    // outside every envelope
    CHECK(classify(d, r, ClassifierMode::unlabeled_only, 0.105) == 0.5);
    CHECK(classify(d, r, ClassifierMode::labeled_only, 0.9) == 0.0);
    CHECK(classify(d, r, ClassifierMode::labeled_only, 0.0) == 1.0);
    CHECK_THROWS_AS(classify(d, r, ClassifierMode::combined, 1.5), std::domain_error);

    const EnvelopeClassifier env(r, d.labeled_x, d.labeled_y);
    CHECK(std::vector<int>(env.envelope_labels().begin(), env.envelope_labels().end()) == std::vector<int>{1, -1});
}

TEST_CASE("1-NN breaks distance ties to the left") {
    const std::vector<double> x{0.2, 0.4};
    const std::vector<int> y{0, 1};
    const NearestNeighborClassifier nn(x, y);
    CHECK(nn(0.3) == 0.0);
    CHECK(nn(0.30001) == 1.0);
}

TEST_CASE("risk of the reference classifiers") {
    const auto m = sample_model(30, 1.0, 0.05, 8);
    CHECK(estimate_risk(m, oracle_classifier(m), 20000, 9) == 0.0);
    const auto d = sample_dataset(m, 50, 5000, 10);
    std::vector<double> sorted = d.unlabeled_x;
    std::sort(sorted.begin(), sorted.end());
    const auto r = reconstruct_support(sorted);
    CHECK(estimate_risk(m, make_classifier(d, r, ClassifierMode::unlabeled_only), 20000, 9) == 0.5);
    CHECK_THROWS(estimate_risk(m, oracle_classifier(m), 0, 9));
}

TEST_CASE("combined classifier in the large-sample regime") {
    double combined = 0.0;
    const int reps = 5;
    for (int s = 0; s < reps; ++s) {
        const auto m = sample_model(100, 1.0, 0.05, 500 + static_cast<std::uint64_t>(s));
        auto d = sample_dataset(m, 200, 1000000, 600 + static_cast<std::uint64_t>(s));
        std::sort(d.unlabeled_x.begin(), d.unlabeled_x.end());
        const auto r = reconstruct_support(d.unlabeled_x);
        combined += estimate_risk(m, make_classifier(d, r, ClassifierMode::combined), 20000, 7);
    }
    CHECK(combined / reps < 0.1);
}

TEST_CASE("model and data CSV") {
    const std::vector<double> u{1.0}, v{1.0};
    const auto m = model_from_draws(u, v, {1});
    std::ostringstream intervals;
    write_intervals_csv(intervals, m);
    CHECK(intervals.str() == "j,a_j,b_j,p_j\n1,0.5,1,1\n");

    DataSet d;
    d.labeled_x = {0.75};
    d.labeled_y = {1};
    d.unlabeled_x = {0.6};
    std::ostringstream data;
    write_data_csv(data, d);
    CHECK(data.str() == "x,y\n0.75,1\n0.6,\n");
}
