#include "seqcal/predictors.hpp"

#include "overloaded.hpp"
#include "seqcal/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace seqcal {

Ar2Coefficients fit_ar2(std::span<const double> history, double ridge) {
    if (history.size() < 3) throw std::invalid_argument("fit_ar2: need at least 3 observations");
    if (!(ridge >= 0.0)) throw std::invalid_argument("fit_ar2: ridge must be non-negative");

    double s11 = 0.0, s12 = 0.0, s22 = 0.0, r1 = 0.0, r2 = 0.0;
    for (std::size_t t = 2; t < history.size(); ++t) {
        const double y = history[t], x1 = history[t - 1], x2 = history[t - 2];
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * y;
        r2 += x2 * y;
    }
    s11 += ridge;
    s22 += ridge;
    const double det = s11 * s22 - s12 * s12;
    if (!(det > 1e-12 * s11 * s22) || !(s11 > 0.0) || !(s22 > 0.0))
        throw std::domain_error("fit_ar2: singular design; use a positive ridge");
    return {(r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det};
}

BasePredictor::BasePredictor(BaseRule rule) : rule_(rule) {
    if (auto* c = std::get_if<ConstantRule>(&rule_); c && !(c->value >= 0.0 && c->value <= 1.0))
        throw std::invalid_argument("constant predictor: value must lie in [0, 1]");
    if (auto* m = std::get_if<MovingAverageRule>(&rule_); m && m->window == 0)
        throw std::invalid_argument("moving average: window must be positive");
    if (auto* a = std::get_if<Ar2Rule>(&rule_); a && (a->refit_period < 3 || a->ridge < 0.0))
        throw std::invalid_argument("ar2 predictor: refit period must be >= 3 and ridge >= 0");
}

namespace {

using detail::Overloaded;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

} // namespace

double BasePredictor::forecast(std::span<const double> history) {
    const double raw = std::visit(
        Overloaded{
            [](const ConstantRule& c) { return c.value; },
            [&](const MovingAverageRule& m) {
                if (history.empty()) return 0.5;
                const std::size_t w = std::min(m.window, history.size());
                const auto tail = history.last(w);
                return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(w);
            },
            [&](const Ar2Rule& a) {
                const std::size_t fit_point = history.size() / a.refit_period * a.refit_period;
                if (fit_point >= 3 && fit_point != fitted_length_) {
                    try {
                        fitted_ = fit_ar2(history.first(fit_point), a.ridge);
                    } catch (const std::domain_error&) {
                        // keep the previous coefficients
                    }
                    fitted_length_ = fit_point;
                }
                if (history.empty()) return 0.5;
                if (!fitted_ || history.size() < 2) return history.back();
                const auto n = history.size();
                return fitted_->beta1 * history[n - 1] + fitted_->beta2 * history[n - 2];
            },
        },
        rule_);
    return clamp01(raw);
}

std::vector<double> uniform_cells(int cells) {
    if (cells < 1) throw std::invalid_argument("partition: need at least one cell");
    std::vector<double> edges(static_cast<std::size_t>(cells) + 1);
    for (int m = 0; m <= cells; ++m) edges[static_cast<std::size_t>(m)] = static_cast<double>(m) / cells;
    return edges;
}

PartitionWrapper::PartitionWrapper(BasePredictor base, GridConfig grid, std::vector<double> cell_edges)
    : base_(std::move(base)), edges_(std::move(cell_edges)) {
    if (edges_.size() < 2 || edges_.front() != 0.0 || edges_.back() != 1.0)
        throw std::invalid_argument("partition: edges must run from 0 to 1");
    if (std::adjacent_find(edges_.begin(), edges_.end(), std::greater_equal<>()) != edges_.end())
        throw std::invalid_argument("partition: edges must be strictly increasing");
    const std::size_t m = edges_.size() - 1;
    calibrators_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) calibrators_.emplace_back(grid, std::nullopt, false);
    counts_.assign(m, 0);
}

int PartitionWrapper::cell_of(double base_forecast) const {
    const double x = clamp01(base_forecast);
    // interior edges only: a value equal to an edge belongs to the cell above it
    const auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, x);
    return static_cast<int>(it - (edges_.begin() + 1));
}

double PartitionWrapper::predict(std::span<const double> history) {
    last_base_ = base_.forecast(history);
    pinned_ = cell_of(last_base_);
    return calibrators_[static_cast<std::size_t>(*pinned_)].predict();
}

void PartitionWrapper::observe(double y) {
    if (!pinned_) throw std::logic_error("partition wrapper: observe() without a preceding predict()");
    const auto m = static_cast<std::size_t>(*pinned_);
    calibrators_[m].observe(y);
    ++counts_[m];
    pinned_.reset();
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
    CsvWriter csv(out);
    csv.header({"t", "base_forecast", "cell", "calibrated_forecast", "outcome", "loss"});
    for (const auto& r : rows) {
        csv.field(r.t).field(r.base_forecast).field(r.cell).field(r.calibrated_forecast).field(r.outcome).field(r.loss());
        csv.end_row();
    }
}

Pp2Loss loss_pp2(std::span<const double> forecasts, std::span<const double> outcomes) {
    if (forecasts.size() != outcomes.size())
        throw std::invalid_argument("loss_pp2: forecasts and outcomes differ in length");
    Pp2Loss loss;
    for (std::size_t t = 0; t < forecasts.size(); ++t) {
        const double d = forecasts[t] - outcomes[t];
        loss.total += d * d;
    }
    loss.mean = forecasts.empty() ? 0.0 : loss.total / static_cast<double>(forecasts.size());
    return loss;
}

void ExtrapolationGuard::observe(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("guard: covariate must be finite");
    if (!range_)
        range_.emplace(x, x);
    else
        range_ = std::pair{std::min(range_->first, x), std::max(range_->second, x)};
}

std::pair<double, double> ExtrapolationGuard::range() const {
    if (!range_) throw std::logic_error("guard: no covariates observed");
    return *range_;
}

GuardVerdict ExtrapolationGuard::check(double x) const {
    const auto [lo, hi] = range();
    if (x < lo) return {false, lo - x};
    if (x > hi) return {false, x - hi};
    return {true, 0.0};
}

double ExtrapolationGuard::apply(const LinearRule& rule, double x) const {
    const auto verdict = check(x);
    if (!verdict.in_range && policy_ == GuardPolicy::reject)
        throw std::out_of_range("guard: covariate " + std::to_string(x) + " is " +
                                std::to_string(verdict.distance) + " outside the fitted range");
    return rule(x);
}

} // namespace seqcal
