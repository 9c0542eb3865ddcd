#include "seqcal/sources.hpp"

#include "overloaded.hpp"
#include "seqcal/csv.hpp"

#include <algorithm>
#include <stdexcept>

namespace seqcal {

namespace {

using detail::Overloaded;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

} // namespace

std::string source_name(const SourceSpec& spec) {
    return std::visit(Overloaded{
                          [](const IidUniform&) { return "iid-uniform"; },
                          [](const IidBeta&) { return "iid-beta"; },
                          [](const Ar2Clamped&) { return "ar2-clamped"; },
                          [](const RegimeSwitch&) { return "regime-switch"; },
                          [](const AdaptiveAdversary&) { return "adaptive-adversary"; },
                      },
                      spec);
}

bool needs_forecast(const SourceSpec& spec) noexcept {
    return std::holds_alternative<AdaptiveAdversary>(spec);
}

void validate(const SourceSpec& spec) {
    std::visit(Overloaded{
                   [](const IidUniform&) {},
                   [](const IidBeta& s) {
                       require(s.a > 0.0, "iid-beta: a must be positive");
                       require(s.b > 0.0, "iid-beta: b must be positive");
                   },
                   [](const Ar2Clamped& s) {
                       require(s.noise >= 0.0, "ar2-clamped: noise must be non-negative");
                       require(in_unit(s.start), "ar2-clamped: start must lie in [0, 1]");
                   },
                   [](const RegimeSwitch& s) {
                       require(in_unit(s.low_mean), "regime-switch: low_mean must lie in [0, 1]");
                       require(in_unit(s.high_mean), "regime-switch: high_mean must lie in [0, 1]");
                       require(in_unit(s.switch_prob), "regime-switch: switch_prob must lie in [0, 1]");
                   },
                   [](const AdaptiveAdversary&) {},
               },
               spec);
}

SequenceSource::SequenceSource(SourceSpec spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
    validate(spec_);
}

double SequenceSource::next(std::span<const double> history, std::optional<double> forecast) {
    const double raw = std::visit(
        Overloaded{
            [&](const IidUniform&) { return rng_.uniform(); },
            [&](const IidBeta& s) { return rng_.beta(s.a, s.b); },
            [&](const Ar2Clamped& s) {
                const auto n = history.size();
                const double y1 = n >= 1 ? history[n - 1] : s.start;
                const double y2 = n >= 2 ? history[n - 2] : s.start;
                const double eps = s.noise > 0.0 ? rng_.normal(0.0, s.noise) : 0.0;
                return s.intercept + s.beta1 * y1 + s.beta2 * y2 + eps;
            },
            [&](const RegimeSwitch& s) {
                if (rng_.bernoulli(s.switch_prob)) high_regime_ = !high_regime_;
                return rng_.bernoulli(high_regime_ ? s.high_mean : s.low_mean) ? 1.0 : 0.0;
            },
            [&](const AdaptiveAdversary&) {
                if (!forecast) throw std::logic_error("adaptive adversary: forecast required");
                return *forecast <= 0.5 ? 1.0 : 0.0;
            },
        },
        spec_);
    return std::clamp(raw, 0.0, 1.0);
}

OutcomeStream::OutcomeStream(SourceSpec spec, std::int64_t horizon, std::uint64_t seed)
    : source_(spec, seed), horizon_(horizon) {
    if (horizon < 1) throw std::invalid_argument("stream: horizon must be >= 1");
    history_.reserve(static_cast<std::size_t>(std::min<std::int64_t>(horizon, 1 << 22)));
}

double OutcomeStream::next(std::optional<double> forecast) {
    if (done()) throw std::logic_error("stream: horizon exhausted");
    const double y = source_.next(history_, forecast);
    history_.push_back(y);
    return y;
}

std::vector<double> draw_stream(const SourceSpec& spec, std::int64_t horizon, std::uint64_t seed) {
    if (needs_forecast(spec)) throw std::logic_error("draw_stream: source needs a forecaster");
    OutcomeStream stream(spec, horizon, seed);
    while (!stream.done()) stream.next();
    return {stream.history().begin(), stream.history().end()};
}

void write_stream_csv(std::ostream& out, std::span<const double> outcomes) {
    CsvWriter csv(out);
    csv.header({"t", "outcome"});
    for (std::size_t t = 0; t < outcomes.size(); ++t) {
        csv.field(static_cast<std::int64_t>(t + 1)).field(outcomes[t]);
        csv.end_row();
    }
}

} // namespace seqcal
