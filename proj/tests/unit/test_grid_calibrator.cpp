#include <doctest.h>

#include "oracles/replay_oracle.hpp"
#include "seqcal/audit.hpp"
#include "seqcal/calibrator.hpp"
#include "seqcal/rng.hpp"

#include <boost/rational.hpp>

#include <vector>

using namespace seqcal;

TEST_CASE("grid config derived quantities") {
    const GridConfig g{10, 1000};
    CHECK(g.eta() == 0.05);
    CHECK(g.level_value(0) == 0.0);
    CHECK(g.level_value(10) == 1.0);
    CHECK(g.bound() == doctest::Approx(0.21).epsilon(1e-15));
    for (int j = 0; j < g.levels; ++j)
        CHECK(g.level_value(j + 1) - g.level_value(j) == doctest::Approx(2 * g.eta()).epsilon(1e-12));

    // eta = 1/(2K) exactly for small K, checked against exact rationals
    for (int k = 1; k <= 64; ++k) {
        const GridConfig c{k, 1000};
        const boost::rational<long> eta(1, 2 * k);
        CHECK(c.eta() == static_cast<double>(eta.numerator()) / static_cast<double>(eta.denominator()));
    }
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(GridConfig({0, 4}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(GridConfig({2, 0}).validate(), std::invalid_argument);
    CHECK(GridConfig{10, 1000}.validate().empty());
    CHECK(GridConfig{10, 5}.validate().size() == 1);
    CHECK_THROWS_AS(GridConfig({10, 5}).validate(InertiaPolicy::reject), std::invalid_argument);
}

TEST_CASE("new calibrator") {
    SUBCASE("explicit level") {
        Calibrator c({2, 4}, 0);
        CHECK(c.predict() == 0.0);
        CHECK(c.state().phase_start == 1);
        CHECK(c.now() == 1);
        CHECK(c.state().phase_sum == 0.0);
    }
    SUBCASE("default level is the centre") {
        Calibrator c({10, 1000});
        CHECK(c.level() == 5);
        CHECK(c.predict() == 0.5);
        CHECK(Calibrator({3, 10}).level() == 1);  // 1/3 and 2/3 tie; downward
        CHECK(Calibrator({1, 10}).level() == 0);
    }
    SUBCASE("bad inputs") {
        CHECK_THROWS(Calibrator({0, 4}));
        CHECK_THROWS(Calibrator({2, 0}));
        CHECK_THROWS(Calibrator({2, 4}, 3));
        CHECK_THROWS(Calibrator({2, 4}, -1));
    }
    SUBCASE("boundary forecasts") {
        CHECK(Calibrator({10, 1000}, 0).predict() == 0.0);
        CHECK(Calibrator({10, 1000}, 10).predict() == 1.0);
    }
}

TEST_CASE("hand-stepped transition") {
    Calibrator c({2, 4}, 0);
    CHECK_FALSE(c.observe(1.0));  // (0 + 1) / 5 = 0.2 <= 0.25
    const auto e = c.observe(1.0);  // 2 / 6 > 0.25
    REQUIRE(e);
    CHECK(e->exit == Exit::up);
    CHECK(e->start == 1);
    CHECK(e->end == 2);
    CHECK(e->level == 0);
    CHECK(c.predict() == 0.5);
    CHECK(c.state().phase_start == 3);
    CHECK(c.state().episode_count == 1);
}

TEST_CASE("band edge is inside the band") {
    // K=2, T=2, level 0: one outcome of 0.75 gives (0 + 0.75) / 3 = 0.25 = eta
    Calibrator c({2, 2}, 0);
    CHECK_FALSE(c.observe(0.75));
    CHECK(c.level() == 0);
}

TEST_CASE("fixed point never moves") {
    for (int j = 0; j <= 10; ++j) {
        Calibrator c({10, 1000}, j);
        for (int t = 0; t < 5000; ++t) REQUIRE_FALSE(c.observe(c.config().level_value(j)));
        CHECK(c.state().episode_count == 0);
    }
}

TEST_CASE("outcomes outside [0, 1] are rejected") {
    Calibrator c({10, 1000});
    CHECK_THROWS_AS(c.observe(1.3), std::domain_error);
    CHECK_THROWS_AS(c.observe(-0.1), std::domain_error);
    CHECK_THROWS_AS(c.observe(std::nan("")), std::domain_error);
    CHECK(c.now() == 1);
}

namespace {

std::vector<int> random_sixteenths(Rng& rng, std::size_t n) {
    std::vector<int> out(n);
    // a drifting bias makes the walk move in both directions
    double bias = rng.uniform();
    for (auto& k : out) {
        if (rng.bernoulli(0.01)) bias = rng.uniform();
        k = static_cast<int>(rng.below(17));
        if (rng.bernoulli(0.5)) k = rng.uniform() < bias ? 16 : 0;
    }
    return out;
}

} // namespace

TEST_CASE("matches the rational replay oracle at every step") {
    Rng rng(20240601);
    for (int run = 0; run < 12; ++run) {
        const int K = 1 + static_cast<int>(rng.below(4));
        const std::int64_t T = 1 + static_cast<std::int64_t>(rng.below(20));
        const int phi0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(K) + 1));
        const auto z = random_sixteenths(rng, 300);

        AuditedCalibrator cal({K, T}, phi0);
        for (std::size_t t = 1; t <= z.size(); ++t) {
            cal.observe(z[t - 1] / 16.0);
            const auto o = oracle::replay(K, T, phi0, z, t);
            REQUIRE(cal.calibrator().level() == o.level);
            REQUIRE(cal.episodes().size() + 1 == o.episodes.size());
            for (int j = 1; j <= K; ++j) {
                const auto r = cal.audit().edge_mean(j);
                REQUIRE(r.has_value() == o.r[static_cast<std::size_t>(j)].has_value());
                if (r) REQUIRE(*r == oracle::to_double(*o.r[static_cast<std::size_t>(j)]));
            }
        }
        const auto o = oracle::replay(K, T, phi0, z, z.size());
        for (std::size_t i = 0; i < cal.episodes().size(); ++i) {
            const auto& e = cal.episodes()[i];
            CHECK(e.start == o.episodes[i].start);
            CHECK(e.end == o.episodes[i].end);
            CHECK(e.level == o.episodes[i].level);
            CHECK((e.exit == Exit::up ? 1 : -1) == o.episodes[i].exit);
        }
    }
}

TEST_CASE("grid walk properties on long random runs") {
    Rng rng(7);
    const GridConfig g{5, 50};
    Calibrator c(g);
    std::vector<EpisodeRecord> episodes;
    std::vector<double> z;
    for (int t = 0; t < 20000; ++t) {
        const double f = c.predict();
        // grid closure
        REQUIRE(f * g.levels == doctest::Approx(static_cast<double>(c.level())));
        z.push_back(rng.uniform() < (t / 1000 % 2 ? 0.9 : 0.1) ? 1.0 : 0.0);
        const int before = c.level();
        if (auto e = c.observe(z.back())) {
            REQUIRE(std::abs(c.level() - before) == 1);
            episodes.push_back(*e);
        }
    }
    REQUIRE(episodes.size() > 20);

    // episode partition of 1..now-1
    std::int64_t expect = 1;
    for (const auto& e : episodes) {
        CHECK(e.start == expect);
        CHECK(e.start <= e.end);
        expect = e.end + 1;
    }
    CHECK(c.open_episode().start == expect);
    CHECK(c.open_episode().end == c.now() - 1);

    // phase band: inside at interior steps, strictly outside at the exit
    for (const auto& e : episodes) {
        const double phi = g.level_value(e.level);
        double sum = 0.0;
        for (std::int64_t s = e.start; s <= e.end; ++s) {
            sum += z[static_cast<std::size_t>(s - 1)];
            const double m = (g.inertia * phi + sum) / static_cast<double>(g.inertia + s - e.start + 1);
            if (s < e.end) {
                REQUIRE(m >= phi - g.eta() - 1e-12);
                REQUIRE(m <= phi + g.eta() + 1e-12);
            } else if (e.exit == Exit::up) {
                REQUIRE(m > phi + g.eta() - 1e-12);
            } else {
                REQUIRE(m < phi - g.eta() + 1e-12);
            }
        }
    }

    // replay determinism
    Calibrator again(g);
    std::vector<EpisodeRecord> second;
    for (double x : z)
        if (auto e = again.observe(x)) second.push_back(*e);
    CHECK(second == episodes);
    CHECK(again.state() == c.state());
}
