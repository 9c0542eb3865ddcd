#pragma once

#include "seqcal/audit.hpp"
#include "seqcal/grid.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

namespace seqcal {

struct Ar2Coefficients {
    double beta1 = 0.0;
    double beta2 = 0.0;
};

/// Least squares of y_t on (y_{t-1}, y_{t-2}), no intercept, with `ridge`
/// added to the diagonal of the 2x2 normal equations. Needs >= 3 points;
/// throws std::domain_error on a singular design when ridge == 0.
Ar2Coefficients fit_ar2(std::span<const double> history, double ridge = 0.0);

struct ConstantRule {
    double value = 0.5;
    bool operator==(const ConstantRule&) const = default;
};

struct MovingAverageRule {
    std::size_t window = 10;
    bool operator==(const MovingAverageRule&) const = default;
};

/// AR(2) refit over the full history whenever its length reaches a multiple
/// of `refit_period`. Until the first fit it forecasts the last observation.
struct Ar2Rule {
    std::size_t refit_period = 100;
    double ridge = 1e-6;
    bool operator==(const Ar2Rule&) const = default;
};

using BaseRule = std::variant<ConstantRule, MovingAverageRule, Ar2Rule>;

/// A forecasting rule f_t(history) -> [0, 1]; outputs are clamped.
class BasePredictor {
public:
    explicit BasePredictor(BaseRule rule);

    double forecast(std::span<const double> history);

    const BaseRule& rule() const noexcept { return rule_; }
    std::optional<Ar2Coefficients> coefficients() const noexcept { return fitted_; }

private:
    BaseRule rule_;
    std::optional<Ar2Coefficients> fitted_;
    std::size_t fitted_length_ = 0;
};

/// Cell boundaries 0 = e_0 < e_1 < ... < e_M = 1 of equal width.
std::vector<double> uniform_cells(int cells);

/// Unbiasing wrapper: base forecasts are routed to cells [e_m, e_{m+1}) (the
/// last cell closed), and each cell runs its own grid-walk calibrator on the
/// outcomes routed to it.
///
/// Protocol per step: predict() pins the cell, observe() feeds that cell and
/// releases the pin.
class PartitionWrapper {
public:
    PartitionWrapper(BasePredictor base, GridConfig grid, std::vector<double> cell_edges);
    PartitionWrapper(BasePredictor base, GridConfig grid, int cells)
        : PartitionWrapper(std::move(base), grid, uniform_cells(cells)) {}

    double predict(std::span<const double> history);
    void observe(double y);

    int cell_of(double base_forecast) const;
    int cells() const noexcept { return static_cast<int>(calibrators_.size()); }

    std::optional<int> pinned_cell() const noexcept { return pinned_; }
    double last_base_forecast() const noexcept { return last_base_; }
    std::span<const std::int64_t> counts() const noexcept { return counts_; }
    const AuditedCalibrator& cell(int m) const { return calibrators_.at(static_cast<std::size_t>(m)); }

private:
    BasePredictor base_;
    std::vector<double> edges_;
    std::vector<AuditedCalibrator> calibrators_;
    std::vector<std::int64_t> counts_;
    std::optional<int> pinned_;
    double last_base_ = 0.0;
};

struct TraceRow {
    std::int64_t t = 0;
    double base_forecast = 0.0;
    int cell = 0;
    double calibrated_forecast = 0.0;
    double outcome = 0.0;

    double loss() const noexcept {
        return (calibrated_forecast - outcome) * (calibrated_forecast - outcome);
    }
};

/// Columns: t, base_forecast, cell, calibrated_forecast, outcome, loss.
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

struct Pp2Loss {
    double total = 0.0;
    double mean = 0.0;
};

/// Cumulative squared loss sum_t (forecast_t - outcome_t)^2.
Pp2Loss loss_pp2(std::span<const double> forecasts, std::span<const double> outcomes);

enum class GuardPolicy { warn, reject };

struct GuardVerdict {
    bool in_range = true;
    double distance = 0.0;  // to the nearest end of the observed range
};

struct LinearRule {
    double intercept = 0.0;
    double slope = 0.0;
    double operator()(double x) const noexcept { return intercept + slope * x; }
};

/// Remembers the covariate range a model was fitted on.
class ExtrapolationGuard {
public:
    explicit ExtrapolationGuard(GuardPolicy policy = GuardPolicy::warn) : policy_(policy) {}

    void observe(double x);
    void observe(std::span<const double> xs) {
        for (double x : xs) observe(x);
    }

    /// Throws std::logic_error before any observation.
    GuardVerdict check(double x) const;

    /// Evaluates `rule` at x; under the reject policy an out-of-range x throws
    /// std::out_of_range.
    double apply(const LinearRule& rule, double x) const;

    bool empty() const noexcept { return !range_; }
    double lo() const { return range().first; }
    double hi() const { return range().second; }
    GuardPolicy policy() const noexcept { return policy_; }

private:
    std::pair<double, double> range() const;

    GuardPolicy policy_;
    std::optional<std::pair<double, double>> range_;
};

} // namespace seqcal
