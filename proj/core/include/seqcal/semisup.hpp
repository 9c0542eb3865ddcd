#pragma once

#include "seqcal/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace seqcal {

/// K disjoint intervals (a_j, b_j) tiling [0, 1] together with K gaps, each
/// interval carrying a pure label p_j in {0, 1}.
///
/// Lengths are u_j / S and gaps v_j / S with S = sum(u) + sum(v); the first
/// piece is the leading gap v_K / S, so a_1 = v_K / S and b_K = 1.
struct SemiSupModel {
    int intervals = 0;
    double sigma = 1.0;
    double tau = 0.05;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<int> p;
    std::uint64_t seed = 0;

    double support_measure() const;
    /// Index of the open interval containing x.
    std::optional<std::size_t> interval_of(double x) const;
    double min_gap() const;
};

/// u_j ~ Exp(mean sigma), v_j ~ Exp(mean tau), p_j fair coin flips.
SemiSupModel sample_model(int intervals, double sigma, double tau, std::uint64_t seed);

/// Builds a model from explicit draws (u, v, p all of length K).
SemiSupModel model_from_draws(std::span<const double> u, std::span<const double> v, std::vector<int> p,
                              double sigma = 1.0, double tau = 1.0);

/// Covariates uniform on the union of intervals.
std::vector<double> sample_covariates(const SemiSupModel& model, std::size_t count, Rng& rng);

struct DataSet {
    std::vector<double> labeled_x;
    std::vector<int> labeled_y;
    std::vector<double> unlabeled_x;
};

/// N covariates uniform on the support; the first n are labeled with y = p_j.
DataSet sample_dataset(const SemiSupModel& model, std::size_t n, std::size_t N, std::uint64_t seed);

struct Envelope {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

struct SupportReconstruction {
    double threshold = 0.0;
    std::size_t points = 0;
    std::vector<Envelope> envelopes;

    std::optional<std::size_t> envelope_of(double x) const;
    /// sum(B_j - A_j) / sum(b_j - a_j).
    double coverage(const SemiSupModel& model) const;
};

/// 2 * log(N) / N.
double default_spacing_threshold(std::size_t points);

/// Splits sorted covariates at every spacing strictly greater than threshold.
SupportReconstruction reconstruct_support(std::span<const double> sorted_x, double threshold);
SupportReconstruction reconstruct_support(std::span<const double> sorted_x);

/// Data-driven threshold: the within-interval spacing scale m is estimated
/// from the median spacing, and the cut goes at the largest ratio between
/// consecutive sorted spacings lying in [m log N / 2, 4 m log N]. Falls back
/// to 2 m log N when that window is empty.
SupportReconstruction reconstruct_support_auto(std::span<const double> sorted_x);

using Classifier = std::function<double(double)>;

enum class ClassifierMode { combined, labeled_only, unlabeled_only };

const char* to_string(ClassifierMode mode) noexcept;

/// Label of the first labeled point sharing x's envelope; 1/2 when there is
/// none or x lies outside every envelope.
class EnvelopeClassifier {
public:
    EnvelopeClassifier(SupportReconstruction reconstruction, std::span<const double> labeled_x,
                       std::span<const int> labeled_y);
    double operator()(double x) const;

    const SupportReconstruction& reconstruction() const noexcept { return reconstruction_; }
    /// Label per envelope: 0, 1, or -1 when no labeled point fell inside.
    std::span<const int> envelope_labels() const noexcept { return labels_; }

private:
    SupportReconstruction reconstruction_;
    std::vector<int> labels_;
};

/// 1-nearest-neighbour on the labeled points; distance ties go to the left.
class NearestNeighborClassifier {
public:
    NearestNeighborClassifier(std::span<const double> labeled_x, std::span<const int> labeled_y);
    double operator()(double x) const;

private:
    std::vector<double> x_;
    std::vector<int> y_;
};

Classifier make_classifier(const DataSet& data, const SupportReconstruction& reconstruction,
                           ClassifierMode mode);
double classify(const DataSet& data, const SupportReconstruction& reconstruction, ClassifierMode mode,
                double x);

/// Uses the true intervals and labels; 1/2 in the gaps.
Classifier oracle_classifier(const SemiSupModel& model);

/// Expected misclassification on n_test fresh draws; a 1/2 prediction costs 1/2.
double estimate_risk(const SemiSupModel& model, const Classifier& classifier, std::size_t n_test,
                     std::uint64_t seed);

/// Columns: j, a_j, b_j, p_j.
void write_intervals_csv(std::ostream& out, const SemiSupModel& model);
/// Columns: x, y (blank for unlabeled points).
void write_data_csv(std::ostream& out, const DataSet& data);

} // namespace seqcal
