#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace ivreg {

/// Real-valued regression problem. X carries no intercept column.
struct DesignProblem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    DesignProblem(Eigen::MatrixXd X_, Eigen::VectorXd y_);

    Eigen::Index rows() const noexcept { return X.rows(); }
    Eigen::Index cols() const noexcept { return X.cols(); }
};

/// Elastic-net penalty lambda * (alpha * |b|_1 + (1 - alpha) * |b|_2^2).
struct PenaltySpec {
    double lambda = 0.0;
    double alpha = 1.0;

    PenaltySpec() = default;
    PenaltySpec(double lambda_, double alpha_);
};

/// Fitted linear coefficients on the original predictor scale.
///
/// `means`/`scales` record the standardization used while fitting; they are
/// informational for prediction (betas are already back-transformed) but let
/// callers reproduce the standardized problem, e.g. for KKT checks.
struct CoefficientSet {
    double intercept = 0.0;
    Eigen::VectorXd betas;
    Eigen::VectorXd means;
    Eigen::VectorXd scales;
    bool converged = true;
    std::size_t iterations = 0;
};

struct SolverOptions {
    bool standardize = true;
    double tol = 1e-7;
    std::size_t max_iter = 100000;
};

/// Ordinary least squares via the normal equations.
/// Throws SingularDesign when the Gram matrix is numerically rank deficient.
CoefficientSet fit_ols(const DesignProblem& problem);

/// Ridge in closed form, intercept unpenalized. With standardization the
/// system (Z'Z + lambda I) b = Z'(y - ybar) is solved on standardized Z.
CoefficientSet fit_ridge(const DesignProblem& problem, double lambda, bool standardize = true);

/// Cyclic coordinate descent for
///   sum_i (y_i - b0 - x_i'b)^2 + lambda * (alpha |b|_1 + (1 - alpha) |b|^2).
/// Stops when the largest standardized coefficient change in a sweep drops
/// below `options.tol`; if `max_iter` sweeps pass first, the last iterate is
/// returned with `converged == false`.
///
/// `warm_start`, when given, holds starting betas on the original scale.
CoefficientSet fit_elastic_net(const DesignProblem& problem, const PenaltySpec& penalty,
                               const SolverOptions& options = {},
                               const Eigen::VectorXd* warm_start = nullptr);

Eigen::VectorXd predict_linear(const CoefficientSet& coeffs, const Eigen::MatrixXd& X_new);

/// Objective value of the un-normalized elastic-net problem on the original scale
/// of `problem`, evaluated at the coefficients as given (no standardization).
double elastic_net_objective(const DesignProblem& problem, const PenaltySpec& penalty,
                             double intercept, const Eigen::VectorXd& betas);

/// Objective value on the standardized scale used by the solver.
double standardized_objective(const DesignProblem& problem, const PenaltySpec& penalty,
                              const CoefficientSet& coeffs);

/// Converts a penalty expressed in glmnet's gaussian convention,
///   RSS / (2n) + lambda * ((1 - alpha)/2 |b|^2 + alpha |b|_1)
/// with glmnet's internal response standardization, to this library's
/// un-normalized objective. `response_sd` uses divisor n.
PenaltySpec glmnet_equivalent_penalty(double glmnet_lambda, double alpha, std::size_t n,
                                      double response_sd);

/// Largest lambda with an active coefficient for the given alpha, on
/// standardized (or merely centered) predictors:
///   2 max_j |sum_i z_ij (y_i - ybar)| / max(alpha, 0.001).
double lambda_max(const DesignProblem& problem, double alpha, bool standardize = true);

namespace detail {

/// Column means and population standard deviations. Columns with zero spread
/// get scale 1 so they stay all-zero after centering.
struct Standardization {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;
    Eigen::MatrixXd Z;
};

Standardization standardize(const Eigen::MatrixXd& X, bool scale);

}  // namespace detail

}  // namespace ivreg
