#pragma once

#include "ivreg/interval_models.hpp"
#include "ivreg/solvers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ivreg {

/// Strictly descending penalty values.
class LambdaGrid {
public:
    enum class Generation { Auto, Explicit };

    /// Throws ValidationError unless values are finite, >= 0 and strictly descending.
    explicit LambdaGrid(std::vector<double> values, Generation generation = Generation::Explicit);

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_.at(i); }
    Generation generation() const noexcept { return generation_; }

private:
    std::vector<double> values_;
    Generation generation_;
};

/// Log-spaced grid from lambda_max down to eps * lambda_max, eps = 1e-4 when
/// n > p and 1e-2 otherwise. Throws ZeroVariance when lambda_max is 0.
LambdaGrid make_lambda_grid(const DesignProblem& design, double alpha, std::size_t n_points,
                            bool standardize = true);

inline constexpr std::size_t kDefaultGridPoints = 100;
inline constexpr std::size_t kDefaultFolds = 10;

/// Deterministic fold assignment: Fisher-Yates shuffle of 0..n-1 driven by
/// std::mt19937_64(seed), then rows dealt round-robin into k folds.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

struct CvOptions {
    std::size_t folds = kDefaultFolds;
    std::uint64_t seed = 0;
    SolverOptions solver{};
};

struct CvResult {
    std::vector<double> lambdas;
    std::vector<double> mean_loss;
    std::vector<double> std_error;
    /// Nonzero center coefficients of a full-data fit at each lambda.
    std::vector<std::size_t> nonzero;
    double lambda_min = 0.0;
    double lambda_1se = 0.0;
    std::size_t index_min = 0;
    std::size_t index_1se = 0;
    std::uint64_t seed = 0;
    std::size_t folds = 0;
};

/// Interval loss used for CV: (RMSE_L^2 + RMSE_U^2) / 2.
double interval_loss(const std::vector<Interval>& observed, const IntervalPrediction& predicted);

/// k-fold CV over a shared lambda (center and range fits use the same value).
/// `family`/`penalty`/`alpha` describe the method; the lambdas in the grid
/// replace the method's hyperparameters.
CvResult cross_validate(const IntervalTable& table, Family family, Penalty penalty, double alpha,
                        const LambdaGrid& grid, const CvOptions& options);

/// CV for the range model of a CRM family with the center lambda held fixed.
CvResult cross_validate_range(const IntervalTable& table, Penalty penalty, double alpha,
                              double lambda_center, const LambdaGrid& range_grid,
                              const CvOptions& options);

struct AlphaSweepResult {
    double alpha = 0.0;
    double lambda = 0.0;
    double loss = 0.0;
    std::vector<double> alphas;
    std::vector<CvResult> runs;
};

/// Runs cross_validate per alpha (each with its own auto grid) and returns the
/// (alpha, lambda_min) pair with the smallest mean loss. Ties go to the larger
/// alpha, then the larger lambda.
AlphaSweepResult alpha_sweep(const IntervalTable& table, Family family,
                             const std::vector<double>& alphas, const CvOptions& options,
                             std::size_t n_points = kDefaultGridPoints);

/// Paper's alpha grid 0, 0.1, ..., 1.
std::vector<double> default_alpha_grid();

struct CoefficientPath {
    std::vector<double> lambdas;
    std::vector<CoefficientSet> center;
    /// Empty for CM families.
    std::vector<CoefficientSet> range;
};

/// Warm-started coefficient path over the grid, largest lambda first.
CoefficientPath coefficient_path(const IntervalTable& table, Family family, Penalty penalty,
                                 double alpha, const LambdaGrid& grid,
                                 const SolverOptions& options = {});

/// Grid built from the center design of `table` for the given method.
LambdaGrid auto_grid(const IntervalTable& table, Penalty penalty, double alpha,
                     std::size_t n_points = kDefaultGridPoints,
                     const SolverOptions& options = {});
LambdaGrid auto_range_grid(const IntervalTable& table, Penalty penalty, double alpha,
                           std::size_t n_points = kDefaultGridPoints,
                           const SolverOptions& options = {});

/// CSV: lambda,mean_loss,std_error,nonzero
std::string format_cv_csv(const CvResult& result);
/// CSV: alpha,lambda,mean_loss,std_error,nonzero
std::string format_alpha_sweep_csv(const AlphaSweepResult& sweep);
/// CSV: lambda,center_intercept,center_<name>...,[range_intercept,range_<name>...]
std::string format_path_csv(const CoefficientPath& path, const std::vector<std::string>& names);

}  // namespace ivreg
