#pragma once

#include "seqcal/rng.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace seqcal {

struct IidUniform {
    bool operator==(const IidUniform&) const = default;
};

struct IidBeta {
    double a = 2.0;
    double b = 2.0;
    bool operator==(const IidBeta&) const = default;
};

/// y_t = intercept + beta1 * y_{t-1} + beta2 * y_{t-2} + N(0, noise^2), clamped
/// to [0, 1]. Missing lags are taken as `start`.
struct Ar2Clamped {
    double beta1 = 0.3;
    double beta2 = 0.2;
    double noise = 0.1;
    double intercept = 0.0;
    double start = 0.5;
    bool operator==(const Ar2Clamped&) const = default;
};

/// Bernoulli outcomes whose success probability flips between two means with
/// probability `switch_prob` before each draw.
struct RegimeSwitch {
    double low_mean = 0.2;
    double high_mean = 0.8;
    double switch_prob = 0.001;
    bool operator==(const RegimeSwitch&) const = default;
};

/// Sees the upcoming forecast and answers 1 when it is <= 1/2, else 0.
struct AdaptiveAdversary {
    bool operator==(const AdaptiveAdversary&) const = default;
};

using SourceSpec = std::variant<IidUniform, IidBeta, Ar2Clamped, RegimeSwitch, AdaptiveAdversary>;

std::string source_name(const SourceSpec& spec);
bool needs_forecast(const SourceSpec& spec) noexcept;
/// Throws std::invalid_argument naming the offending field.
void validate(const SourceSpec& spec);

/// A seeded outcome generator. Stochastic variants ignore the forecast.
class SequenceSource {
public:
    SequenceSource(SourceSpec spec, std::uint64_t seed);

    /// Next outcome in [0, 1]. Throws std::logic_error when the adversary is
    /// called without a forecast.
    double next(std::span<const double> history, std::optional<double> forecast = std::nullopt);

    const SourceSpec& spec() const noexcept { return spec_; }

private:
    SourceSpec spec_;
    Rng rng_;
    bool high_regime_ = false;
};

/// A finite stream of `horizon` outcomes that keeps its own history.
class OutcomeStream {
public:
    OutcomeStream(SourceSpec spec, std::int64_t horizon, std::uint64_t seed);

    bool done() const noexcept { return static_cast<std::int64_t>(history_.size()) >= horizon_; }
    double next(std::optional<double> forecast = std::nullopt);

    std::span<const double> history() const noexcept { return history_; }
    std::int64_t horizon() const noexcept { return horizon_; }
    const SourceSpec& spec() const noexcept { return source_.spec(); }

private:
    SequenceSource source_;
    std::int64_t horizon_;
    std::vector<double> history_;
};

/// Whole stream of a forecast-free source.
std::vector<double> draw_stream(const SourceSpec& spec, std::int64_t horizon, std::uint64_t seed);

template <class F>
concept Forecaster = requires(F f, double z) {
    { f.predict() } -> std::convertible_to<double>;
    f.observe(z);
};

/// Runs predict -> next outcome -> observe until the stream ends, calling
/// step(t, forecast, outcome) after each observation (t counts from 1).
template <Forecaster F, class Step>
void play(OutcomeStream& stream, F& forecaster, Step&& step) {
    std::int64_t t = 0;
    while (!stream.done()) {
        const double forecast = forecaster.predict();
        const double outcome = stream.next(forecast);
        forecaster.observe(outcome);
        step(++t, forecast, outcome);
    }
}

template <Forecaster F>
void play(OutcomeStream& stream, F& forecaster) {
    play(stream, forecaster, [](std::int64_t, double, double) {});
}

/// Columns: t, outcome.
void write_stream_csv(std::ostream& out, std::span<const double> outcomes);

} // namespace seqcal
