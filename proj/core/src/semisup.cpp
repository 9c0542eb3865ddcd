#include "seqcal/semisup.hpp"

#include "seqcal/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace seqcal {

double SemiSupModel::support_measure() const {
    double total = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) total += b[j] - a[j];
    return total;
}

std::optional<std::size_t> SemiSupModel::interval_of(double x) const {
    const auto it = std::upper_bound(a.begin(), a.end(), x);
    if (it == a.begin()) return std::nullopt;
    const auto j = static_cast<std::size_t>(it - a.begin()) - 1;
    if (x > a[j] && x < b[j]) return j;
    return std::nullopt;
}

double SemiSupModel::min_gap() const {
    double gap = a.empty() ? 0.0 : a.front();
    for (std::size_t j = 1; j < a.size(); ++j) gap = std::min(gap, a[j] - b[j - 1]);
    return gap;
}

SemiSupModel model_from_draws(std::span<const double> u, std::span<const double> v, std::vector<int> p,
                              double sigma, double tau) {
    const std::size_t k = u.size();
    if (k == 0 || v.size() != k || p.size() != k)
        throw std::invalid_argument("semisup model: u, v and p must have the same positive length");
    for (std::size_t j = 0; j < k; ++j) {
        if (!(u[j] > 0.0) || !(v[j] > 0.0)) throw std::invalid_argument("semisup model: draws must be positive");
        if (p[j] != 0 && p[j] != 1) throw std::invalid_argument("semisup model: labels must be 0 or 1");
    }

    SemiSupModel model;
    model.intervals = static_cast<int>(k);
    model.sigma = sigma;
    model.tau = tau;
    model.p = std::move(p);
    model.a.resize(k);
    model.b.resize(k);

    // prefix positions in draw units; the last one is S itself, so b_K = S / S
    double pos = v[k - 1];
    for (std::size_t j = 0; j < k; ++j) {
        model.a[j] = pos;
        pos += u[j];
        model.b[j] = pos;
        if (j + 1 < k) pos += v[j];
    }
    const double total = pos;
    for (std::size_t j = 0; j < k; ++j) {
        model.a[j] /= total;
        model.b[j] /= total;
    }
    return model;
}

SemiSupModel sample_model(int intervals, double sigma, double tau, std::uint64_t seed) {
    if (intervals < 1) throw std::invalid_argument("semisup model: K must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("semisup model: sigma must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("semisup model: tau must be positive");
    Rng rng(seed);
    const auto k = static_cast<std::size_t>(intervals);
    std::vector<double> u(k), v(k);
    std::vector<int> p(k);
    for (auto& x : u) x = rng.exponential(sigma);
    for (auto& x : v) x = rng.exponential(tau);
    for (auto& x : p) x = rng.bernoulli(0.5) ? 1 : 0;
    auto model = model_from_draws(u, v, std::move(p), sigma, tau);
    model.seed = seed;
    return model;
}

std::vector<double> sample_covariates(const SemiSupModel& model, std::size_t count, Rng& rng) {
    std::vector<double> cumulative(model.a.size());
    double total = 0.0;
    for (std::size_t j = 0; j < model.a.size(); ++j) {
        total += model.b[j] - model.a[j];
        cumulative[j] = total;
    }
    std::vector<double> xs(count);
    for (auto& x : xs) {
        const double r = rng.uniform() * total;
        auto j = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                          cumulative.begin());
        j = std::min(j, cumulative.size() - 1);
        x = model.a[j] + (model.b[j] - model.a[j]) * rng.uniform_open();
    }
    return xs;
}

DataSet sample_dataset(const SemiSupModel& model, std::size_t n, std::size_t N, std::uint64_t seed) {
    if (n < 1 || n > N) throw std::invalid_argument("semisup dataset: need 1 <= n <= N");
    Rng rng(seed);
    auto xs = sample_covariates(model, N, rng);
    DataSet data;
    data.labeled_x.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(n));
    data.labeled_y.reserve(n);
    for (double x : data.labeled_x) {
        const auto j = model.interval_of(x);
        if (!j) throw std::logic_error("semisup dataset: covariate outside the support");
        data.labeled_y.push_back(model.p[*j]);
    }
    data.unlabeled_x.assign(xs.begin() + static_cast<std::ptrdiff_t>(n), xs.end());
    return data;
}

std::optional<std::size_t> SupportReconstruction::envelope_of(double x) const {
    const auto it = std::upper_bound(envelopes.begin(), envelopes.end(), x,
                                     [](double v, const Envelope& e) { return v < e.lo; });
    if (it == envelopes.begin()) return std::nullopt;
    const auto j = static_cast<std::size_t>(it - envelopes.begin()) - 1;
    if (x <= envelopes[j].hi) return j;
    return std::nullopt;
}

double SupportReconstruction::coverage(const SemiSupModel& model) const {
    double covered = 0.0;
    for (const auto& e : envelopes) covered += e.hi - e.lo;
    return covered / model.support_measure();
}

double default_spacing_threshold(std::size_t points) {
    if (points < 2) throw std::invalid_argument("spacing threshold: need at least 2 points");
    const double n = static_cast<double>(points);
    return 2.0 * std::log(n) / n;
}

namespace {

void require_sorted(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("reconstruct_support: need at least 2 points");
    if (!std::is_sorted(xs.begin(), xs.end()))
        throw std::invalid_argument("reconstruct_support: covariates must be sorted ascending");
}

} // namespace

SupportReconstruction reconstruct_support(std::span<const double> sorted_x, double threshold) {
    require_sorted(sorted_x);
    if (!(threshold > 0.0)) throw std::invalid_argument("reconstruct_support: threshold must be positive");
    SupportReconstruction rec;
    rec.threshold = threshold;
    rec.points = sorted_x.size();
    Envelope current{sorted_x[0], sorted_x[0], 1};
    for (std::size_t i = 1; i < sorted_x.size(); ++i) {
        if (sorted_x[i] - sorted_x[i - 1] > threshold) {
            rec.envelopes.push_back(current);
            current = {sorted_x[i], sorted_x[i], 0};
        }
        current.hi = sorted_x[i];
        ++current.count;
    }
    rec.envelopes.push_back(current);
    return rec;
}

SupportReconstruction reconstruct_support(std::span<const double> sorted_x) {
    require_sorted(sorted_x);
    return reconstruct_support(sorted_x, default_spacing_threshold(sorted_x.size()));
}

SupportReconstruction reconstruct_support_auto(std::span<const double> sorted_x) {
    require_sorted(sorted_x);
    std::vector<double> spacings;
    spacings.reserve(sorted_x.size());
    for (std::size_t i = 1; i < sorted_x.size(); ++i)
        if (sorted_x[i] > sorted_x[i - 1]) spacings.push_back(sorted_x[i] - sorted_x[i - 1]);
    if (spacings.empty()) return reconstruct_support(sorted_x, 1.0);
    std::sort(spacings.begin(), spacings.end());

    // Within-interval spacings are roughly exponential; the median gives their
    // mean, and the largest of N of them sits near mean * log N.
    const double mean = spacings[spacings.size() / 2] / std::log(2.0);
    const double log_n = std::log(static_cast<double>(sorted_x.size()));
    const double lo = 0.5 * mean * log_n;
    const double hi = 4.0 * mean * log_n;
    double threshold = 2.0 * mean * log_n;
    double best_ratio = 0.0;
    for (std::size_t i = 0; i + 1 < spacings.size(); ++i) {
        if (spacings[i] < lo || spacings[i] > hi) continue;
        const double ratio = spacings[i + 1] / spacings[i];
        if (ratio > best_ratio) {
            best_ratio = ratio;
            threshold = spacings[i];
        }
    }
    return reconstruct_support(sorted_x, threshold);
}

const char* to_string(ClassifierMode mode) noexcept {
    switch (mode) {
    case ClassifierMode::combined: return "combined";
    case ClassifierMode::labeled_only: return "labeled_only";
    case ClassifierMode::unlabeled_only: return "unlabeled_only";
    }
    return "?";
}

namespace {

void require_unit(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("classify: x must lie in [0, 1]");
}

void require_labels(std::span<const double> x, std::span<const int> y) {
    if (x.size() != y.size()) throw std::invalid_argument("classifier: labeled x and y differ in length");
}

} // namespace

EnvelopeClassifier::EnvelopeClassifier(SupportReconstruction reconstruction, std::span<const double> labeled_x,
                                       std::span<const int> labeled_y)
    : reconstruction_(std::move(reconstruction)), labels_(reconstruction_.envelopes.size(), -1) {
    require_labels(labeled_x, labeled_y);
    for (std::size_t i = 0; i < labeled_x.size(); ++i) {
        const auto e = reconstruction_.envelope_of(labeled_x[i]);
        if (e && labels_[*e] < 0) labels_[*e] = labeled_y[i];
    }
}

double EnvelopeClassifier::operator()(double x) const {
    require_unit(x);
    const auto e = reconstruction_.envelope_of(x);
    if (!e || labels_[*e] < 0) return 0.5;
    return labels_[*e];
}

NearestNeighborClassifier::NearestNeighborClassifier(std::span<const double> labeled_x,
                                                     std::span<const int> labeled_y) {
    require_labels(labeled_x, labeled_y);
    if (labeled_x.empty()) throw std::invalid_argument("1-NN: no labeled points");
    std::vector<std::size_t> order(labeled_x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return labeled_x[l] < labeled_x[r]; });
    for (auto i : order) {
        x_.push_back(labeled_x[i]);
        y_.push_back(labeled_y[i]);
    }
}

double NearestNeighborClassifier::operator()(double x) const {
    require_unit(x);
    const auto it = std::lower_bound(x_.begin(), x_.end(), x);
    if (it == x_.begin()) return y_.front();
    if (it == x_.end()) return y_.back();
    const auto right = static_cast<std::size_t>(it - x_.begin());
    const auto left = right - 1;
    return (x - x_[left] <= x_[right] - x) ? y_[left] : y_[right];
}

Classifier make_classifier(const DataSet& data, const SupportReconstruction& reconstruction,
                           ClassifierMode mode) {
    switch (mode) {
    case ClassifierMode::combined:
        return EnvelopeClassifier(reconstruction, data.labeled_x, data.labeled_y);
    case ClassifierMode::labeled_only:
        return NearestNeighborClassifier(data.labeled_x, data.labeled_y);
    case ClassifierMode::unlabeled_only:
        return [](double x) {
            require_unit(x);
            return 0.5;
        };
    }
    throw std::invalid_argument("unknown classifier mode");
}

double classify(const DataSet& data, const SupportReconstruction& reconstruction, ClassifierMode mode,
                double x) {
    return make_classifier(data, reconstruction, mode)(x);
}

Classifier oracle_classifier(const SemiSupModel& model) {
    return [model](double x) {
        require_unit(x);
        const auto j = model.interval_of(x);
        return j ? static_cast<double>(model.p[*j]) : 0.5;
    };
}

double estimate_risk(const SemiSupModel& model, const Classifier& classifier, std::size_t n_test,
                     std::uint64_t seed) {
    if (n_test < 1) throw std::invalid_argument("estimate_risk: n_test must be >= 1");
    Rng rng(seed);
    const auto xs = sample_covariates(model, n_test, rng);
    double loss = 0.0;
    for (double x : xs) {
        const auto j = model.interval_of(x);
        const double y = j ? model.p[*j] : 0.0;
        loss += std::abs(classifier(x) - y);
    }
    return loss / static_cast<double>(n_test);
}

void write_intervals_csv(std::ostream& out, const SemiSupModel& model) {
    CsvWriter csv(out);
    csv.header({"j", "a_j", "b_j", "p_j"});
    for (std::size_t j = 0; j < model.a.size(); ++j) {
        csv.field(static_cast<std::int64_t>(j + 1)).field(model.a[j]).field(model.b[j]).field(model.p[j]);
        csv.end_row();
    }
}

void write_data_csv(std::ostream& out, const DataSet& data) {
    CsvWriter csv(out);
    csv.header({"x", "y"});
    for (std::size_t i = 0; i < data.labeled_x.size(); ++i) {
        csv.field(data.labeled_x[i]).field(data.labeled_y[i]);
        csv.end_row();
    }
    for (double x : data.unlabeled_x) {
        csv.field(x).empty();
        csv.end_row();
    }
}

} // namespace seqcal
