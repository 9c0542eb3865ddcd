#include "seqcal/selection.hpp"

#include "seqcal/csv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace seqcal {

CandidateSet::CandidateSet(std::vector<Candidate> candidates, std::vector<std::size_t> fit_ids)
    : candidates_(std::move(candidates)), fit_ids_(std::move(fit_ids)) {
    if (candidates_.empty()) throw std::invalid_argument("candidate set: no candidates");
    const bool has_baseline = std::any_of(candidates_.begin(), candidates_.end(),
                                          [](const Candidate& c) { return c.provenance == Provenance::baseline; });
    if (!has_baseline) throw std::invalid_argument("candidate set: the labeled-only baseline is missing");
}

std::size_t argmin_risk(std::span<const double> risks) {
    if (risks.empty()) throw std::invalid_argument("argmin_risk: empty candidate set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < risks.size(); ++i)
        if (risks[i] < risks[best]) best = i;
    return best;
}

double empirical_risk(const Classifier& classifier, std::span<const double> x, std::span<const int> y) {
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("empirical_risk: bad labeled sample");
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) loss += std::abs(classifier(x[i]) - y[i]);
    return loss / static_cast<double>(x.size());
}

Selection select_predictor(const CandidateSet& candidates, const LabeledSample& holdout) {
    if (holdout.x.empty()) throw std::invalid_argument("select_predictor: empty holdout");
    const std::unordered_set<std::size_t> fitted(candidates.fit_ids().begin(), candidates.fit_ids().end());
    for (auto id : holdout.ids)
        if (fitted.count(id)) throw std::invalid_argument("select_predictor: holdout overlaps the fitting sample");

    Selection out;
    for (const auto& c : candidates.candidates())
        out.holdout_risks.push_back(empirical_risk(c.predict, holdout.x, holdout.y));
    out.chosen = argmin_risk(out.holdout_risks);
    return out;
}

CandidateSet build_candidate_set(std::span<const double> sorted_unlabeled, const LabeledSample& fit,
                                 std::span<const double> multipliers) {
    const double n = static_cast<double>(sorted_unlabeled.size());
    std::vector<Candidate> candidates;
    for (double c : multipliers) {
        auto rec = reconstruct_support(sorted_unlabeled, c * std::log(n) / n);
        candidates.push_back({"envelope_c" + format_double(c), Provenance::from_unlabeled,
                              EnvelopeClassifier(std::move(rec), fit.x, fit.y)});
    }
    candidates.push_back({"envelope_auto", Provenance::from_unlabeled,
                          EnvelopeClassifier(reconstruct_support_auto(sorted_unlabeled), fit.x, fit.y)});
    candidates.push_back({"labeled_1nn", Provenance::baseline, NearestNeighborClassifier(fit.x, fit.y)});
    return CandidateSet(std::move(candidates), fit.ids);
}

} // namespace seqcal
