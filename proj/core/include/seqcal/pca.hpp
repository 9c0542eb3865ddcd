#pragma once

#include "seqcal/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace seqcal {

struct PcaOptions {
    int max_iterations = 20000;
    double tolerance = 1e-12;
};

struct PcaResult {
    Eigen::MatrixXd components;  // p x s, orthonormal columns
    Eigen::VectorXd eigenvalues; // nonincreasing, nonnegative
    Eigen::VectorXd mean;

    /// Scores of the rows of x on the components.
    Eigen::MatrixXd project(const Eigen::MatrixXd& x) const;
};

/// Top-s eigenpairs of the sample covariance (divisor n - 1) by power
/// iteration with deflation. Zero-variance directions come back with
/// eigenvalue 0 and an arbitrary orthonormal completion.
PcaResult pca_fit(const Eigen::MatrixXd& data, int components, const PcaOptions& options = {});

/// p features in p/2 pairs with unit variance and within-pair correlation rho
/// (pairs independent). The response depends on the first pair's difference:
/// y = beta * (x1 - x2) + N(0, noise^2).
struct CorrelatedPairModel {
    int features = 50;
    double rho = 0.99;
    double beta = 1.0;
    double noise = 0.02;

    void validate() const;
    bool operator==(const CorrelatedPairModel&) const = default;
};

struct RegressionData {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

RegressionData sample_pairs(const CorrelatedPairModel& model, std::size_t n, Rng& rng);

enum class Design { pcs_only, pcs_plus_raw };

const char* to_string(Design design) noexcept;

struct DesignChoice {
    Design design = Design::pcs_only;
    int components = 5;
};

struct RegressionOptions {
    /// Extra covariates used together with the training x for the PCA step.
    const Eigen::MatrixXd* unlabeled = nullptr;
    /// Ridge on the centred second-moment scale; default 1e-3 * trace(cov) / p
    /// of the design matrix.
    std::optional<double> ridge;
};

/// Fits y on the chosen design with an intercept and returns out-of-sample R^2.
double regress(const DesignChoice& choice, const RegressionData& train, const RegressionData& test,
               const RegressionOptions& options = {});

} // namespace seqcal
