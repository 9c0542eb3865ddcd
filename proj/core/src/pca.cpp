#include "seqcal/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace seqcal {

Eigen::MatrixXd PcaResult::project(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()) * components;
}

namespace {

// Removes the span of the first `count` columns of basis from v.
void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, int count) {
    for (int pass = 0; pass < 2; ++pass)
        for (int c = 0; c < count; ++c) v -= basis.col(c).dot(v) * basis.col(c);
}

// A unit vector orthogonal to the first `count` columns of basis.
Eigen::VectorXd completion(const Eigen::MatrixXd& basis, int count) {
    const auto p = basis.rows();
    double best = -1.0;
    Eigen::VectorXd pick;
    for (Eigen::Index i = 0; i < p; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(p, i);
        orthogonalize(e, basis, count);
        const double norm = e.norm();
        if (norm > best) {
            best = norm;
            pick = e / norm;
        }
    }
    return pick;
}

} // namespace

PcaResult pca_fit(const Eigen::MatrixXd& data, int components, const PcaOptions& options) {
    const auto n = data.rows();
    const auto p = data.cols();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    if (components < 1 || components > std::min<Eigen::Index>(n, p))
        throw std::invalid_argument("pca_fit: component count must lie in 1..min(n, p)");

    PcaResult result;
    result.mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - result.mean.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    const double scale = std::max(cov.trace(), std::numeric_limits<double>::min());

    result.components.setZero(p, components);
    result.eigenvalues.setZero(components);

    Rng rng(0x5eed5eedULL);
    for (int c = 0; c < components; ++c) {
        Eigen::VectorXd v(p);
        for (Eigen::Index i = 0; i < p; ++i) v[i] = rng.uniform(-1.0, 1.0);
        orthogonalize(v, result.components, c);
        v.normalize();

        bool degenerate = false;
        for (int it = 0; it < options.max_iterations; ++it) {
            Eigen::VectorXd w = cov * v;
            orthogonalize(w, result.components, c);
            const double norm = w.norm();
            if (norm <= 1e-14 * scale) {
                degenerate = true;
                break;
            }
            w /= norm;
            if (w.dot(v) < 0) w = -w;
            const double change = (w - v).norm();
            v = w;
            if (change < options.tolerance) break;
        }
        if (degenerate) v = completion(result.components, c);

        const double lambda = v.dot(cov * v);
        result.components.col(c) = v;
        result.eigenvalues[c] = std::max(0.0, lambda);
        // Hotelling deflation
        cov -= lambda * v * v.transpose();
    }

    // near-degenerate pairs can converge slightly out of order
    std::vector<int> order(static_cast<std::size_t>(components));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int l, int r) { return result.eigenvalues[l] > result.eigenvalues[r]; });
    PcaResult sorted = result;
    for (int c = 0; c < components; ++c) {
        sorted.components.col(c) = result.components.col(order[static_cast<std::size_t>(c)]);
        sorted.eigenvalues[c] = result.eigenvalues[order[static_cast<std::size_t>(c)]];
    }
    return sorted;
}

void CorrelatedPairModel::validate() const {
    if (features < 2 || features % 2 != 0)
        throw std::invalid_argument("correlated pairs: features must be a positive even number");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("correlated pairs: rho must lie in (0, 1)");
    if (!(noise >= 0.0)) throw std::invalid_argument("correlated pairs: noise must be non-negative");
}

RegressionData sample_pairs(const CorrelatedPairModel& model, std::size_t n, Rng& rng) {
    model.validate();
    const auto rows = static_cast<Eigen::Index>(n);
    RegressionData data{Eigen::MatrixXd(rows, model.features), Eigen::VectorXd(rows)};
    const double shared = std::sqrt(model.rho);
    const double own = std::sqrt(1.0 - model.rho);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (int pair = 0; pair < model.features / 2; ++pair) {
            const double common = rng.normal();
            data.x(i, 2 * pair) = shared * common + own * rng.normal();
            data.x(i, 2 * pair + 1) = shared * common + own * rng.normal();
        }
        data.y[i] = model.beta * (data.x(i, 0) - data.x(i, 1)) + model.noise * rng.normal();
    }
    return data;
}

const char* to_string(Design design) noexcept {
    return design == Design::pcs_only ? "pcs_only" : "pcs_plus_raw";
}

namespace {

Eigen::MatrixXd design_matrix(const DesignChoice& choice, const PcaResult& pca, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd scores = pca.project(x);
    if (choice.design == Design::pcs_only) return scores;
    Eigen::MatrixXd out(x.rows(), scores.cols() + x.cols());
    out << scores, x;
    return out;
}

} // namespace

double regress(const DesignChoice& choice, const RegressionData& train, const RegressionData& test,
               const RegressionOptions& options) {
    if (train.x.rows() < 2 || test.x.rows() < 1)
        throw std::invalid_argument("regress: train needs >= 2 rows and test >= 1 row");
    if (train.x.rows() != train.y.size() || test.x.rows() != test.y.size())
        throw std::invalid_argument("regress: x and y row counts differ");
    if (train.x.cols() != test.x.cols()) throw std::invalid_argument("regress: train and test widths differ");

    Eigen::MatrixXd pca_input = train.x;
    if (options.unlabeled && options.unlabeled->rows() > 0) {
        if (options.unlabeled->cols() != train.x.cols())
            throw std::invalid_argument("regress: unlabeled width differs");
        pca_input.resize(train.x.rows() + options.unlabeled->rows(), train.x.cols());
        pca_input << train.x, *options.unlabeled;
    }
    const PcaResult pca = pca_fit(pca_input, choice.components);

    const Eigen::MatrixXd f_train = design_matrix(choice, pca, train.x);
    const Eigen::MatrixXd f_test = design_matrix(choice, pca, test.x);

    const Eigen::RowVectorXd f_mean = f_train.colwise().mean();
    const double y_mean = train.y.mean();
    const Eigen::MatrixXd fc = f_train.rowwise() - f_mean;
    const double n = static_cast<double>(f_train.rows());
    Eigen::MatrixXd gram = fc.transpose() * fc / n;
    const double ridge =
        options.ridge.value_or(1e-3 * gram.trace() / static_cast<double>(gram.cols()));
    if (!(ridge >= 0.0)) throw std::invalid_argument("regress: ridge must be non-negative");
    gram.diagonal().array() += ridge;
    const Eigen::VectorXd rhs = fc.transpose() * (train.y.array() - y_mean).matrix() / n;
    const Eigen::VectorXd coef = gram.ldlt().solve(rhs);

    const Eigen::VectorXd pred = ((f_test.rowwise() - f_mean) * coef).array() + y_mean;
    const double sse = (test.y - pred).squaredNorm();
    const double sst = (test.y.array() - test.y.mean()).matrix().squaredNorm();
    if (!(sst > 0.0)) throw std::domain_error("regress: test response has zero variance");
    return 1.0 - sse / sst;
}

} // namespace seqcal
