#pragma once

#include "seqcal/semisup.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace seqcal {

enum class Provenance { from_unlabeled, baseline };

struct Candidate {
    std::string name;
    Provenance provenance = Provenance::from_unlabeled;
    Classifier predict;
};

/// Labeled points with the ids they carry in the sample they came from.
struct LabeledSample {
    std::vector<double> x;
    std::vector<int> y;
    std::vector<std::size_t> ids;
};

/// Candidate predictors plus the ids of the labeled points used to fit them.
/// Holds at least one baseline candidate.
class CandidateSet {
public:
    CandidateSet(std::vector<Candidate> candidates, std::vector<std::size_t> fit_ids);

    std::span<const Candidate> candidates() const noexcept { return candidates_; }
    std::size_t size() const noexcept { return candidates_.size(); }
    const Candidate& operator[](std::size_t i) const { return candidates_.at(i); }
    std::span<const std::size_t> fit_ids() const noexcept { return fit_ids_; }

private:
    std::vector<Candidate> candidates_;
    std::vector<std::size_t> fit_ids_;
};

struct Selection {
    std::size_t chosen = 0;
    std::vector<double> holdout_risks;
};

/// Argmin of risks; ties go to the lowest index. Throws on an empty list.
std::size_t argmin_risk(std::span<const double> risks);

/// Mean loss |prediction - y| of one classifier on labeled data.
double empirical_risk(const Classifier& classifier, std::span<const double> x, std::span<const int> y);

/// Chooses among the candidates by holdout risk alone. The holdout must be
/// nonempty and share no id with the points the candidates were fitted on.
Selection select_predictor(const CandidateSet& candidates, const LabeledSample& holdout);

/// Reconstruction-based classifiers built from the unlabeled covariates at
/// spacing thresholds c * log(N) / N for each c in `multipliers`, one
/// automatic-threshold candidate, and the 1-NN baseline on the fit sample.
CandidateSet build_candidate_set(std::span<const double> sorted_unlabeled, const LabeledSample& fit,
                                 std::span<const double> multipliers);

} // namespace seqcal
