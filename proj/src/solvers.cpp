#include "ivreg/solvers.hpp"

#include "ivreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ivreg {

namespace {

bool all_finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

// Inner products differing from the lambda_max formula only in summation
// order must not let a coordinate enter at lambda_max itself.
constexpr double kThresholdGuard = 1e-12;

double soft_threshold(double z, double gamma) {
    const double g = gamma * (1.0 + kThresholdGuard);
    if (z > g) return z - gamma;
    if (z < -g) return z + gamma;
    return 0.0;
}

// Cholesky of a symmetric positive definite matrix, in place on the lower
// triangle. A pivot below 1e-12 * max diagonal is reported as singular.
Eigen::VectorXd cholesky_solve(Eigen::MatrixXd G, const Eigen::VectorXd& rhs) {
    const Eigen::Index p = G.rows();
    const double max_diag = p > 0 ? G.diagonal().maxCoeff() : 0.0;
    const double threshold = 1e-12 * max_diag;
    for (Eigen::Index j = 0; j < p; ++j) {
        double d = G(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= G(j, k) * G(j, k);
        if (!(d > threshold)) {
            throw SingularDesign(static_cast<std::size_t>(j),
                                 "singular design: pivot " + std::to_string(j) +
                                     " collapsed (predictor column is constant or collinear)");
        }
        const double l = std::sqrt(d);
        G(j, j) = l;
        for (Eigen::Index i = j + 1; i < p; ++i) {
            double s = G(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= G(i, k) * G(j, k);
            G(i, j) = s / l;
        }
    }
    Eigen::VectorXd x = rhs;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index k = 0; k < i; ++k) x(i) -= G(i, k) * x(k);
        x(i) /= G(i, i);
    }
    for (Eigen::Index i = p - 1; i >= 0; --i) {
        for (Eigen::Index k = i + 1; k < p; ++k) x(i) -= G(k, i) * x(k);
        x(i) /= G(i, i);
    }
    return x;
}

CoefficientSet back_transform(const detail::Standardization& s, double y_mean,
                              const Eigen::VectorXd& b) {
    CoefficientSet out;
    out.betas = b.cwiseQuotient(s.scales);
    out.intercept = y_mean - s.means.dot(out.betas);
    out.means = s.means;
    out.scales = s.scales;
    return out;
}

// Shared path of OLS and ridge: centered (optionally scaled) normal equations.
CoefficientSet solve_centered(const DesignProblem& problem, double lambda, bool standardize) {
    const auto s = detail::standardize(problem.X, standardize);
    const double y_mean = problem.y.mean();
    const Eigen::VectorXd yc = problem.y.array() - y_mean;
    Eigen::MatrixXd G = s.Z.transpose() * s.Z;
    G.diagonal().array() += lambda;
    Eigen::VectorXd rhs = s.Z.transpose() * yc;
    Eigen::VectorXd b = cholesky_solve(G, rhs);
    // One step of iterative refinement keeps the normal-equation residual at
    // rounding level for badly scaled predictors.
    const Eigen::VectorXd residual = rhs - G * b;
    b += cholesky_solve(G, residual);
    auto out = back_transform(s, y_mean, b);
    if (!out.betas.allFinite() || !std::isfinite(out.intercept)) {
        throw NonFiniteEncountered("non-finite coefficients in closed-form solve");
    }
    return out;
}

// Coordinate descent with a coefficient-change stopping rule can stop well
// short of the minimizer on ill-conditioned designs. Once it has converged,
// solve the stationarity equations exactly on the support it found:
//   (Z_A'Z_A + l2 I) b_A = Z_A'yc - l1 sign(b_A).
// The result is kept only when every sign survives and each excluded
// coordinate would move by less than `tol` under one more update.
void polish_active_set(const Eigen::MatrixXd& Z, const Eigen::VectorXd& yc, const Eigen::VectorXd& col_sq,
                       double l1, double l2, double tol, Eigen::VectorXd& b, Eigen::VectorXd& r) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) active.push_back(j);
    if (active.empty()) return;
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd ZA(Z.rows(), k);
    Eigen::VectorXd sign(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        ZA.col(a) = Z.col(active[static_cast<std::size_t>(a)]);
        sign(a) = b(active[static_cast<std::size_t>(a)]) > 0.0 ? 1.0 : -1.0;
    }
    Eigen::MatrixXd G = ZA.transpose() * ZA;
    G.diagonal().array() += l2;
    const Eigen::VectorXd rhs = ZA.transpose() * yc - l1 * sign;
    Eigen::VectorXd bA;
    try {
        bA = cholesky_solve(G, rhs);
        bA += cholesky_solve(G, rhs - G * bA);
    } catch (const SingularDesign&) {
        return;
    }
    if (!bA.allFinite()) return;
    for (Eigen::Index a = 0; a < k; ++a)
        if (bA(a) * sign(a) <= 0.0) return;
    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index a = 0; a < k; ++a) candidate(active[static_cast<std::size_t>(a)]) = bA(a);
    const Eigen::VectorXd r_new = yc - Z * candidate;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (candidate(j) != 0.0) continue;
        if (std::abs(Z.col(j).dot(r_new)) > l1 + tol * (col_sq(j) + l2)) return;
    }
    b = candidate;
    r = r_new;
}

}  // namespace

DesignProblem::DesignProblem(Eigen::MatrixXd X_, Eigen::VectorXd y_)
    : X(std::move(X_)), y(std::move(y_)) {
    if (X.rows() < 1) throw ValidationError("design needs at least one row");
    if (X.cols() < 1) throw ValidationError("design needs at least one predictor");
    if (X.rows() != y.size()) {
        throw ValidationError("design has " + std::to_string(X.rows()) + " rows but response has " +
                              std::to_string(y.size()));
    }
    if (!all_finite(X) || !y.allFinite()) throw ValidationError("design contains non-finite values");
}

PenaltySpec::PenaltySpec(double lambda_, double alpha_) : lambda(lambda_), alpha(alpha_) {
    if (!std::isfinite(lambda) || lambda < 0.0) throw ValidationError("lambda must be finite and >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
}

namespace detail {

Standardization standardize(const Eigen::MatrixXd& X, bool scale) {
    const auto n = static_cast<double>(X.rows());
    Standardization s;
    s.means = X.colwise().mean().transpose();
    s.Z = X.rowwise() - s.means.transpose();
    s.scales = Eigen::VectorXd::Ones(X.cols());
    if (scale) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double sd = std::sqrt(s.Z.col(j).squaredNorm() / n);
            if (sd > 0.0) {
                s.scales(j) = sd;
                s.Z.col(j) /= sd;
            }
        }
    }
    return s;
}

}  // namespace detail

CoefficientSet fit_ols(const DesignProblem& problem) {
    return solve_centered(problem, 0.0, false);
}

CoefficientSet fit_ridge(const DesignProblem& problem, double lambda, bool standardize) {
    if (!std::isfinite(lambda) || lambda < 0.0) throw ValidationError("lambda must be finite and >= 0");
    return solve_centered(problem, lambda, standardize);
}

CoefficientSet fit_elastic_net(const DesignProblem& problem, const PenaltySpec& penalty,
                               const SolverOptions& options, const Eigen::VectorXd* warm_start) {
    if (!(options.tol > 0.0)) throw ValidationError("tolerance must be > 0");
    if (options.max_iter < 1) throw ValidationError("max_iter must be >= 1");
    PenaltySpec checked(penalty.lambda, penalty.alpha);

    const auto s = detail::standardize(problem.X, options.standardize);
    const Eigen::Index p = s.Z.cols();
    const double y_mean = problem.y.mean();
    Eigen::VectorXd r = problem.y.array() - y_mean;

    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    if (warm_start != nullptr) {
        if (warm_start->size() != p) throw ValidationError("warm start has wrong length");
        b = warm_start->cwiseProduct(s.scales);
        r -= s.Z * b;
    }
    const Eigen::VectorXd col_sq = s.Z.colwise().squaredNorm().transpose();
    const double l1 = checked.lambda * checked.alpha / 2.0;
    const double l2 = checked.lambda * (1.0 - checked.alpha);

    bool converged = false;
    std::size_t sweep = 0;
    while (sweep < options.max_iter) {
        ++sweep;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double denom = col_sq(j) + l2;
            double next = 0.0;
            if (denom > 0.0) {
                const double z = s.Z.col(j).dot(r) + col_sq(j) * b(j);
                next = soft_threshold(z, l1) / denom;
            }
            const double delta = next - b(j);
            if (delta != 0.0) {
                r -= delta * s.Z.col(j);
                b(j) = next;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (!std::isfinite(max_change) || !r.allFinite()) {
            throw NonFiniteEncountered("coordinate descent diverged (non-finite iterate)");
        }
        if (max_change < options.tol) {
            converged = true;
            break;
        }
    }
    if (converged) {
        const Eigen::VectorXd yc = problem.y.array() - y_mean;
        polish_active_set(s.Z, yc, col_sq, l1, l2, options.tol, b, r);
    }
    auto out = back_transform(s, y_mean, b);
    out.converged = converged;
    out.iterations = sweep;
    return out;
}

Eigen::VectorXd predict_linear(const CoefficientSet& coeffs, const Eigen::MatrixXd& X_new) {
    if (X_new.cols() != coeffs.betas.size()) {
        throw ValidationError("prediction matrix has " + std::to_string(X_new.cols()) +
                              " columns, model expects " + std::to_string(coeffs.betas.size()));
    }
    Eigen::VectorXd out = X_new * coeffs.betas;
    out.array() += coeffs.intercept;
    return out;
}

double elastic_net_objective(const DesignProblem& problem, const PenaltySpec& penalty,
                             double intercept, const Eigen::VectorXd& betas) {
    Eigen::VectorXd r = problem.y - problem.X * betas;
    r.array() -= intercept;
    return r.squaredNorm() +
           penalty.lambda * (penalty.alpha * betas.lpNorm<1>() + (1.0 - penalty.alpha) * betas.squaredNorm());
}

double standardized_objective(const DesignProblem& problem, const PenaltySpec& penalty,
                              const CoefficientSet& coeffs) {
    const Eigen::VectorXd b = coeffs.betas.cwiseProduct(coeffs.scales);
    Eigen::VectorXd r = problem.y - problem.X * coeffs.betas;
    r.array() -= coeffs.intercept;
    return r.squaredNorm() +
           penalty.lambda * (penalty.alpha * b.lpNorm<1>() + (1.0 - penalty.alpha) * b.squaredNorm());
}

PenaltySpec glmnet_equivalent_penalty(double glmnet_lambda, double alpha, std::size_t n,
                                      double response_sd) {
    if (!(response_sd > 0.0)) throw ValidationError("response standard deviation must be > 0");
    const auto nn = static_cast<double>(n);
    const double l1 = 2.0 * nn * glmnet_lambda * alpha;
    const double l2 = nn * glmnet_lambda * (1.0 - alpha) / response_sd;
    const double lambda = l1 + l2;
    if (lambda == 0.0) return PenaltySpec(0.0, alpha);
    return PenaltySpec(lambda, std::clamp(l1 / lambda, 0.0, 1.0));
}

double lambda_max(const DesignProblem& problem, double alpha, bool standardize) {
    const auto s = detail::standardize(problem.X, standardize);
    const Eigen::VectorXd yc = problem.y.array() - problem.y.mean();
    const double grad = (s.Z.transpose() * yc).cwiseAbs().maxCoeff();
    return 2.0 * grad / std::max(alpha, 0.001);
}

}  // namespace ivreg
