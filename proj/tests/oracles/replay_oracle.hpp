#pragma once

// Straight-from-the-definitions replay of the grid walk, in exact rational
// arithmetic. Outcomes are dyadic k/16 so every quantity is representable.
// Shares no code with the library.

#include <boost/rational.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace oracle {

using Q = boost::rational<std::int64_t>;

struct Episode {
    int level = 0;  // grid index
    std::int64_t start = 0;
    std::int64_t end = 0;  // last time of the phase
    int exit = 0;          // +1 up, -1 down, 0 still running
};

struct Replay {
    std::vector<Episode> episodes;  // closed ones, then the running one
    int level = 0;                  // forecast index for the next time
    std::vector<std::set<std::int64_t>> a;  // A_j: times of episodes at j exiting down
    std::vector<std::set<std::int64_t>> b;  // B_j: times of episodes at j-1 exiting up
    std::vector<std::optional<Q>> r;        // R_tj over A_j and B_j
};

/// Replays the first `steps` outcomes (in sixteenths) from level phi0.
///
/// Phase i starts at t_i with level phi_i; t_{i+1} is the first t > t_i with
///   (T phi_i + sum_{s = t_i}^{t-1} Z_s) / (T + t - t_i) outside [phi_i - eta, phi_i + eta],
/// and phi_{i+1} = phi_i +- 2 eta on the side it left.
inline Replay replay(int K, std::int64_t T, int phi0, std::span<const int> sixteenths, std::size_t steps) {
    const Q eta(1, 2 * K);
    auto z = [&](std::int64_t s) { return Q(sixteenths[static_cast<std::size_t>(s - 1)], 16); };

    Replay out;
    out.a.resize(static_cast<std::size_t>(K) + 1);
    out.b.resize(static_cast<std::size_t>(K) + 1);
    out.r.resize(static_cast<std::size_t>(K) + 1);

    int level = phi0;
    std::int64_t t_i = 1;
    Q sum(0);
    const auto last = static_cast<std::int64_t>(steps) + 1;  // time after the final observation
    for (std::int64_t t = t_i + 1; t <= last; ++t) {
        sum += z(t - 1);
        const Q phi(level, K);
        const Q mean = (Q(T) * phi + sum) / Q(T + t - t_i);
        int exit = 0;
        if (mean > phi + eta) exit = +1;
        if (mean < phi - eta) exit = -1;
        if (exit == 0) continue;
        out.episodes.push_back({level, t_i, t - 1, exit});
        level += exit;
        t_i = t;
        sum = 0;
    }
    out.episodes.push_back({level, t_i, last - 1, 0});
    out.level = level;

    for (const auto& e : out.episodes) {
        if (e.exit == 0) continue;
        const int edge = e.exit < 0 ? e.level : e.level + 1;
        auto& set = e.exit < 0 ? out.a[static_cast<std::size_t>(edge)] : out.b[static_cast<std::size_t>(edge)];
        for (std::int64_t s = e.start; s <= e.end; ++s) set.insert(s);
    }
    for (int j = 1; j <= K; ++j) {
        const auto& a = out.a[static_cast<std::size_t>(j)];
        const auto& b = out.b[static_cast<std::size_t>(j)];
        if (a.empty() && b.empty()) continue;
        Q total(0);
        for (auto s : a) total += z(s);
        for (auto s : b) total += z(s);
        out.r[static_cast<std::size_t>(j)] = total / Q(static_cast<std::int64_t>(a.size() + b.size()));
    }
    return out;
}

inline double to_double(const Q& q) {
    return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

} // namespace oracle
